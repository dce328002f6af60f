use std::io;

use thiserror::Error;

/// Errors raised anywhere in the scoring toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error at byte offset {offset}: {source}")]
    Io {
        offset: u64,
        #[source]
        source: io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported version {version} or dtype {dtype}")]
    Version { version: u32, dtype: u8 },

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Length { expected: u64, actual: u64 },

    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("capacity error: pool of {pool} documents cannot fill candidate groups of size {k}")]
    Capacity { pool: usize, k: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular system: {0}; use a positive ridge strength")]
    Singular(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("model ids differ: only in report {only_in_report:?}, only in truth {only_in_truth:?}")]
    IdMismatch {
        only_in_report: Vec<String>,
        only_in_truth: Vec<String>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage annotations peeled away.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

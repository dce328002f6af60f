use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Exit codes reported by the `airtran` binary.
pub mod exit {
    pub const FAILURE: i32 = 1;
    pub const MISSING_FILE: i32 = 2;
    pub const FORMAT: i32 = 3;
    pub const NUMERIC: i32 = 4;
    pub const ID_MISMATCH: i32 = 5;
    pub const BAD_CONFIG: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("model {model}: {source}")]
    Model {
        model: String,
        #[source]
        source: airtran::Error,
    },

    #[error("model {model}, {}: {source}", path.display())]
    ModelFile {
        model: String,
        path: PathBuf,
        #[source]
        source: airtran::Error,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: airtran::Error,
    },

    #[error(transparent)]
    Core(#[from] airtran::Error),

    #[error("bad configuration: {0}")]
    Config(String),
}

impl CliError {
    pub(crate) fn file(path: impl Into<PathBuf>, source: airtran::Error) -> Self {
        CliError::File {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn model(model: &str, source: airtran::Error) -> Self {
        CliError::Model {
            model: model.to_string(),
            source,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::file(path, airtran::Error::Io { offset: 0, source })
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::BAD_CONFIG,
            CliError::Model { source, .. }
            | CliError::ModelFile { source, .. }
            | CliError::File { source, .. }
            | CliError::Core(source) => code_for(source.root()),
        }
    }
}

fn code_for(err: &airtran::Error) -> i32 {
    use airtran::Error as E;
    match err {
        E::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => exit::MISSING_FILE,
        E::Io { .. } => exit::FAILURE,
        E::Format(_)
        | E::Version { .. }
        | E::Length { .. }
        | E::NonFinite { .. }
        | E::Schema(_)
        | E::Shape(_)
        | E::EmptyInput(_) => exit::FORMAT,
        E::Numeric(_) | E::Singular(_) | E::Degenerate(_) => exit::NUMERIC,
        E::IdMismatch { .. } => exit::ID_MISMATCH,
        E::Config(_) | E::Capacity { .. } => exit::BAD_CONFIG,
        E::Stage { source, .. } => code_for(source),
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::pipeline::{Method, ScoreConfig};
use super::rank::Similarity;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub method: Method,
    pub whitening: bool,
    pub adaptive_scaling: bool,
    pub epsilon_rel: f64,
    pub lambda_rel: f64,
    pub similarity: Similarity,
}

impl ReportConfig {
    /// Records the stage flags actually in effect for `method`.
    pub fn new(method: Method, config: &ScoreConfig) -> Self {
        let staged = method.uses_stages();
        ReportConfig {
            method,
            whitening: staged && config.use_whitening,
            adaptive_scaling: staged && config.use_adaptive_scaling,
            epsilon_rel: config.epsilon_rel,
            lambda_rel: config.lambda_rel,
            similarity: config.similarity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub score: f64,
    pub seconds: f64,
}

/// Per-model scores for one dataset, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferabilityReport {
    pub dataset: String,
    pub k: usize,
    pub seed: u64,
    pub config: ReportConfig,
    pub scores: Vec<ModelScore>,
}

impl TransferabilityReport {
    /// Sorts by descending score, ties broken by model id; rejects
    /// duplicate ids and non-finite scores.
    pub fn new(
        dataset: String,
        k: usize,
        seed: u64,
        config: ReportConfig,
        mut scores: Vec<ModelScore>,
    ) -> Result<Self> {
        scores.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.model.cmp(&b.model))
        });
        let report = TransferabilityReport {
            dataset,
            k,
            seed,
            config,
            scores,
        };
        report.validate()?;
        Ok(report)
    }

    fn validate(&self) -> Result<()> {
        let mut ids: Vec<&str> = self.scores.iter().map(|s| s.model.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Schema(format!("duplicate model id {:?} in report", w[0])));
        }
        if let Some(s) = self.scores.iter().find(|s| !s.score.is_finite()) {
            return Err(Error::Numeric(format!("model {:?} has non-finite score", s.model)));
        }
        Ok(())
    }

    pub fn top(&self) -> Option<&ModelScore> {
        self.scores.first()
    }

    pub fn score_of(&self, model: &str) -> Option<f64> {
        self.scores.iter().find(|s| s.model == model).map(|s| s.score)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(self.to_json().as_bytes())
            .map_err(|source| Error::Io { offset: 0, source })
    }

    pub fn read<R: Read>(source: R) -> Result<Self> {
        let report: TransferabilityReport =
            serde_json::from_reader(source).map_err(|e| Error::Schema(format!("report file: {e}")))?;
        report.validate()?;
        Ok(report)
    }
}

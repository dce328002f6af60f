use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub id: String,
    pub score: f64,
}

/// Ground-truth fine-tuning results for a model pool,
/// stored as `{"models": [{"id": str, "score": float}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPoolTruth {
    pub models: Vec<TruthEntry>,
}

impl ModelPoolTruth {
    pub fn new(models: Vec<TruthEntry>) -> Result<Self> {
        let truth = ModelPoolTruth { models };
        truth.validate()?;
        Ok(truth)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.len() < 2 {
            return Err(Error::Schema(format!(
                "a model pool needs at least 2 models, got {}",
                self.models.len()
            )));
        }
        let mut seen = HashSet::new();
        for m in &self.models {
            if !seen.insert(m.id.as_str()) {
                return Err(Error::Schema(format!("duplicate model id {:?}", m.id)));
            }
            if !(0.0..=1.0).contains(&m.score) {
                return Err(Error::Schema(format!(
                    "score {} of model {:?} is outside [0, 1]",
                    m.score, m.id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.models.iter().find(|m| m.id == id).map(|m| m.score)
    }

    pub fn read<R: Read>(source: R) -> Result<Self> {
        let truth: ModelPoolTruth =
            serde_json::from_reader(source).map_err(|e| Error::Schema(format!("truth file: {e}")))?;
        truth.validate()?;
        Ok(truth)
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut sink, self).map_err(|e| Error::Format(e.to_string()))?;
        sink.write_all(b"\n").map_err(|source| Error::Io { offset: 0, source })
    }
}

//! Whitening → adaptive scaling → expected rank, per candidate model.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::likelihood::{log_likelihood_score, LikelihoodMode};
use super::quality::{quality_score, Uniformity};
use super::rank::{expected_rank_score_with, Similarity};
use crate::adascale::{hadamard_pairs, solve_scaling, ScalingWeights, DEFAULT_LAMBDA_REL};
use crate::data::{EmbeddingMatrix, RankingDataset};
use crate::error::Result;
use crate::isotropize::{apply_whitening, fit_whitening, DEFAULT_EPSILON_REL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub use_whitening: bool,
    pub use_adaptive_scaling: bool,
    pub epsilon_rel: f64,
    pub lambda_rel: f64,
    #[serde(default)]
    pub similarity: Similarity,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            use_whitening: true,
            use_adaptive_scaling: true,
            epsilon_rel: DEFAULT_EPSILON_REL,
            lambda_rel: DEFAULT_LAMBDA_REL,
            similarity: Similarity::Dot,
        }
    }
}

impl ScoreConfig {
    /// Plain expected rank on raw embeddings.
    pub fn raw() -> Self {
        ScoreConfig {
            use_whitening: false,
            use_adaptive_scaling: false,
            ..ScoreConfig::default()
        }
    }
}

/// Embeddings after the enabled transformation stages.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub queries: EmbeddingMatrix,
    pub docs: EmbeddingMatrix,
    pub scaling: Option<ScalingWeights>,
}

impl Prepared {
    pub fn weights(&self) -> Option<&[f64]> {
        self.scaling.as_ref().map(|s| s.weights.as_slice())
    }
}

/// Runs the enabled stages. Whitening is fit on the `2N` stacked rows (the
/// query and the document of every labeled pair) and applied to both full
/// matrices; scaling weights are fit on all `N` labeled pairs.
pub fn prepare(
    dataset: &RankingDataset,
    raw_query_emb: &EmbeddingMatrix,
    raw_doc_emb: &EmbeddingMatrix,
    config: &ScoreConfig,
) -> Result<Prepared> {
    super::rank::check_inputs(dataset, raw_query_emb, raw_doc_emb, None)?;
    let (queries, docs) = if config.use_whitening {
        let whiten = || -> Result<_> {
            let q_rows: Vec<usize> = dataset.pairs().iter().map(|p| p.query_row).collect();
            let d_rows: Vec<usize> = dataset.pairs().iter().map(|p| p.doc_row).collect();
            let stacked = raw_query_emb
                .select_rows(&q_rows)?
                .stack(&raw_doc_emb.select_rows(&d_rows)?)?;
            let model = fit_whitening(&stacked, config.epsilon_rel)?;
            Ok((
                apply_whitening(&model, raw_query_emb)?,
                apply_whitening(&model, raw_doc_emb)?,
            ))
        };
        whiten().map_err(|e| e.in_stage("whitening"))?
    } else {
        (raw_query_emb.clone(), raw_doc_emb.clone())
    };
    let scaling = if config.use_adaptive_scaling {
        let features = hadamard_pairs(&queries, &docs, dataset).map_err(|e| e.in_stage("adaptive scaling"))?;
        Some(
            solve_scaling(&features, &dataset.labels(), config.lambda_rel)
                .map_err(|e| e.in_stage("adaptive scaling"))?,
        )
    } else {
        None
    };
    Ok(Prepared { queries, docs, scaling })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedScore {
    pub score: f64,
    pub seconds: f64,
}

/// Full transferability score for one model. The timing covers all
/// enabled stages and the ranking, not embedding loading.
pub fn airtran_score(
    dataset: &RankingDataset,
    raw_query_emb: &EmbeddingMatrix,
    raw_doc_emb: &EmbeddingMatrix,
    config: &ScoreConfig,
) -> Result<TimedScore> {
    let start = Instant::now();
    let prepared = prepare(dataset, raw_query_emb, raw_doc_emb, config)?;
    let score = expected_rank_score_with(
        dataset,
        &prepared.queries,
        &prepared.docs,
        prepared.weights(),
        config.similarity,
    )
    .map_err(|e| e.in_stage("expected rank"))?;
    Ok(TimedScore {
        score,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Scoring methods selectable per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Expected rank after the configured whitening and scaling stages.
    Airtran,
    /// Expected rank on raw embeddings.
    Rank,
    /// Alignment + uniformity quality score after the configured stages.
    Qtran,
    /// Mean log-probability of the relevant document on raw embeddings.
    Loglik,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Airtran => "airtran",
            Method::Rank => "rank",
            Method::Qtran => "qtran",
            Method::Loglik => "loglik",
        }
    }

    /// Whether the whitening/scaling flags affect this method.
    pub fn uses_stages(self) -> bool {
        matches!(self, Method::Airtran | Method::Qtran)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Scores one model with `method`. Stage flags in `config` are ignored by
/// methods that work on raw embeddings. `seed` drives the uniformity
/// sampling of `Qtran`.
pub fn score_model(
    method: Method,
    dataset: &RankingDataset,
    raw_query_emb: &EmbeddingMatrix,
    raw_doc_emb: &EmbeddingMatrix,
    config: &ScoreConfig,
    seed: u64,
) -> Result<TimedScore> {
    match method {
        Method::Airtran => airtran_score(dataset, raw_query_emb, raw_doc_emb, config),
        Method::Rank => airtran_score(
            dataset,
            raw_query_emb,
            raw_doc_emb,
            &ScoreConfig {
                similarity: config.similarity,
                ..ScoreConfig::raw()
            },
        ),
        Method::Qtran => {
            let start = Instant::now();
            let prepared = prepare(dataset, raw_query_emb, raw_doc_emb, config)?;
            let q = quality_score(
                dataset,
                &prepared.queries,
                &prepared.docs,
                prepared.weights(),
                Uniformity::default_for(dataset, seed),
            )?;
            Ok(TimedScore {
                score: q.total(),
                seconds: start.elapsed().as_secs_f64(),
            })
        }
        Method::Loglik => {
            let start = Instant::now();
            let score = log_likelihood_score(dataset, raw_query_emb, raw_doc_emb, LikelihoodMode::PerRelevant)?;
            Ok(TimedScore {
                score,
                seconds: start.elapsed().as_secs_f64(),
            })
        }
    }
}

//! Transferability estimation for text-ranking model selection.
//!
//! Candidate pre-trained encoders are scored by how well their embeddings
//! already rank relevant documents above sampled irrelevant ones. Raw
//! embeddings are whitened to remove anisotropy, reweighted per dimension
//! by a closed-form least-squares fit against the relevance labels, and
//! then summarized as the mean reciprocal rank of each query's relevant
//! document within its candidate group.
//!
//! ```
//! use airtran::scoring::{airtran_score, ScoreConfig};
//! use airtran::synthpool::{generate_pool, SynthConfig};
//!
//! let config = SynthConfig::geometric(3, 100, 5, 8, (0.2, 2.0), 1.0, 7);
//! let pool = generate_pool(&config).unwrap();
//! let scores: Vec<f64> = pool
//!     .models
//!     .iter()
//!     .map(|m| airtran_score(&pool.dataset, &m.queries, &m.docs, &ScoreConfig::default()).unwrap().score)
//!     .collect();
//! assert!(scores[0] > scores[2]);
//! ```
//!
//! The guide in `book/` walks through each stage.

pub mod adascale;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod isotropize;
pub mod numeric;
pub mod rng;
pub mod scoring;
pub mod synthpool;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/expected-rank.md")]
    pub struct ExpectedRank;
    #[doc = include_str!("../../../book/src/whitening.md")]
    pub struct Whitening;
    #[doc = include_str!("../../../book/src/adaptive-scaling.md")]
    pub struct AdaptiveScaling;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub struct Evaluation;
    #[doc = include_str!("../../../book/src/synthetic-pools.md")]
    pub struct SyntheticPools;
    #[doc = include_str!("../../../book/src/file-formats.md")]
    pub struct FileFormats;
}

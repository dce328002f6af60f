//! Turning embeddings into a transferability score.

mod likelihood;
mod pipeline;
mod quality;
mod rank;
mod report;

pub use likelihood::{group_log_likelihood, log_likelihood_score, softmax_group_log_likelihood, LikelihoodMode};
pub use pipeline::{airtran_score, prepare, score_model, Method, Prepared, ScoreConfig, TimedScore};
pub use quality::{quality_score, QualityScore, Uniformity};
pub use rank::{expected_rank_score, expected_rank_score_with, rank_of_relevant, Similarity};
pub use report::{ModelScore, ReportConfig, TransferabilityReport};

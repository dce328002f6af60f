//! Matrix and dataset containers with their on-disk formats.

mod dataset;
mod matrix;
mod sample;
mod truth;

pub use dataset::{read_manifest, read_relevant_pairs, write_manifest, CandidateGroup, Pair, RankingDataset};
pub use matrix::{load_matrix, read_matrix, save_matrix, write_matrix, EmbeddingMatrix, HEADER_LEN};
pub use sample::{sample_candidates, DEFAULT_MAX_QUERIES};
pub use truth::{ModelPoolTruth, TruthEntry};

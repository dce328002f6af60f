//! Alignment + uniformity quality score.

use std::collections::BTreeSet;

use super::rank::check_inputs;
use crate::adascale::weighted_dot;
use crate::data::{EmbeddingMatrix, RankingDataset};
use crate::error::Result;
use crate::numeric::CompensatedSum;
use crate::rng::Prng;

/// How the uniformity expectation over random instance pairs is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uniformity {
    /// Every unordered pair of distinct instances.
    Exhaustive,
    /// `pairs` ordered pairs of distinct instances drawn with `seed`.
    Sampled { pairs: usize, seed: u64 },
}

impl Uniformity {
    /// Ten sampled pairs per labeled pair.
    pub fn default_for(dataset: &RankingDataset, seed: u64) -> Self {
        Uniformity::Sampled {
            pairs: 10 * dataset.pair_count(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScore {
    /// Mean affinity of each query with its relevant document.
    pub alignment: f64,
    /// Mean of the negated affinity between random distinct instances.
    pub uniformity: f64,
}

impl QualityScore {
    pub fn total(&self) -> f64 {
        self.alignment + self.uniformity
    }
}

/// Instances are the distinct query rows and the distinct document rows
/// the dataset references. Affinity is the (optionally weighted) dot product.
pub fn quality_score(
    dataset: &RankingDataset,
    query_emb: &EmbeddingMatrix,
    doc_emb: &EmbeddingMatrix,
    weights: Option<&[f64]>,
    uniformity: Uniformity,
) -> Result<QualityScore> {
    check_inputs(dataset, query_emb, doc_emb, weights)?;

    let mut align = CompensatedSum::default();
    for g in dataset.groups() {
        align.add(weighted_dot(
            query_emb.row(g.query_row),
            doc_emb.row(g.relevant_row),
            weights,
        ));
    }
    let alignment = align.value() / dataset.query_count() as f64;

    let queries: BTreeSet<usize> = dataset.pairs().iter().map(|p| p.query_row).collect();
    let docs: BTreeSet<usize> = dataset.pairs().iter().map(|p| p.doc_row).collect();
    let instances: Vec<&[f32]> = queries
        .iter()
        .map(|&r| query_emb.row(r))
        .chain(docs.iter().map(|&r| doc_emb.row(r)))
        .collect();
    let n = instances.len();

    let mut spread = CompensatedSum::default();
    let count = match uniformity {
        Uniformity::Exhaustive => {
            for i in 0..n {
                for j in i + 1..n {
                    spread.add(-weighted_dot(instances[i], instances[j], weights));
                }
            }
            n * (n - 1) / 2
        }
        Uniformity::Sampled { pairs, seed } => {
            let mut rng = Prng::new(seed);
            for _ in 0..pairs {
                let i = rng.index(n);
                let mut j = rng.index(n - 1);
                if j >= i {
                    j += 1;
                }
                spread.add(-weighted_dot(instances[i], instances[j], weights));
            }
            pairs
        }
    };
    let uniformity = if count == 0 { 0.0 } else { spread.value() / count as f64 };
    Ok(QualityScore { alignment, uniformity })
}

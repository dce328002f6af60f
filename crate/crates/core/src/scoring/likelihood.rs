//! Softmax log-likelihood of the relevant document, kept as a diagnostic
//! that a likelihood-style score can disagree with ranking quality.

use super::rank::{check_inputs, group_scores, Similarity};
use crate::data::{EmbeddingMatrix, RankingDataset};
use crate::error::Result;
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodMode {
    /// Natural log of the relevant document's probability.
    PerRelevant,
    /// Sum over every candidate of the base-10 log-probability of its own
    /// label, `log10 p` for the relevant document and `log10 (1 − p)` for
    /// the others.
    PerDocument,
}

/// Log-likelihood of one candidate group given per-candidate matching
/// probabilities.
pub fn group_log_likelihood(probabilities: &[f64], relevant_index: usize, mode: LikelihoodMode) -> f64 {
    match mode {
        LikelihoodMode::PerRelevant => probabilities[relevant_index].ln(),
        LikelihoodMode::PerDocument => probabilities
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                if j == relevant_index {
                    p.log10()
                } else {
                    (1.0 - p).log10()
                }
            })
            .sum(),
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Same as [`group_log_likelihood`] with probabilities taken as the softmax
/// of raw scores, evaluated in log space so no term overflows.
pub fn softmax_group_log_likelihood(scores: &[f64], relevant_index: usize, mode: LikelihoodMode) -> f64 {
    let all = log_sum_exp(scores.iter().copied());
    let ln_p = |j: usize| scores[j] - all;
    let ln_not_p = |j: usize| {
        let others = scores.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &s)| s);
        log_sum_exp(others) - all
    };
    match mode {
        LikelihoodMode::PerRelevant => ln_p(relevant_index),
        LikelihoodMode::PerDocument => {
            (0..scores.len())
                .map(|j| if j == relevant_index { ln_p(j) } else { ln_not_p(j) })
                .sum::<f64>()
                / std::f64::consts::LN_10
        }
    }
}

/// Mean over queries of the softmax log-likelihood of the relevant
/// document under raw dot-product scores.
pub fn log_likelihood_score(
    dataset: &RankingDataset,
    query_emb: &EmbeddingMatrix,
    doc_emb: &EmbeddingMatrix,
    mode: LikelihoodMode,
) -> Result<f64> {
    check_inputs(dataset, query_emb, doc_emb, None)?;
    let mut total = CompensatedSum::default();
    let mut scores = Vec::with_capacity(dataset.k());
    for group in dataset.groups() {
        group_scores(group, query_emb, doc_emb, None, Similarity::Dot, &mut scores);
        total.add(softmax_group_log_likelihood(&scores, 0, mode));
    }
    Ok(total.value() / dataset.query_count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CandidateGroup;
    use approx::assert_abs_diff_eq;

    #[test]
    fn motivating_example_values() {
        let first = group_log_likelihood(&[0.5, 0.45, 0.45], 0, LikelihoodMode::PerDocument);
        let second = group_log_likelihood(&[0.6, 0.65, 0.1], 0, LikelihoodMode::PerDocument);
        assert_abs_diff_eq!(first, -0.82, epsilon = 0.005);
        assert_abs_diff_eq!(second, -0.72, epsilon = 0.005);
        assert!(second > first);
        assert_abs_diff_eq!(
            group_log_likelihood(&[0.5, 0.45, 0.45], 0, LikelihoodMode::PerRelevant),
            0.5f64.ln()
        );
    }

    #[test]
    fn softmax_matches_explicit_probabilities() {
        let scores = [1.3, -0.2, 0.7, 0.0];
        let z: f64 = scores.iter().map(|s: &f64| s.exp()).sum();
        let probs: Vec<f64> = scores.iter().map(|s| s.exp() / z).collect();
        for mode in [LikelihoodMode::PerRelevant, LikelihoodMode::PerDocument] {
            assert_abs_diff_eq!(
                softmax_group_log_likelihood(&scores, 2, mode),
                group_log_likelihood(&probs, 2, mode),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn no_overflow_on_large_scores() {
        let v = softmax_group_log_likelihood(&[1000.0, 999.0, -1000.0], 0, LikelihoodMode::PerDocument);
        assert!(v.is_finite());
        let v = softmax_group_log_likelihood(&[1e6, 0.0], 1, LikelihoodMode::PerRelevant);
        assert_eq!(v, -1e6);
    }

    #[test]
    fn uniform_scores() {
        let ds = RankingDataset::from_groups(vec![CandidateGroup {
            query_row: 0,
            relevant_row: 0,
            irrelevant_rows: vec![1, 2, 3],
        }])
        .unwrap();
        let q = EmbeddingMatrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
        let d = EmbeddingMatrix::from_rows(&[[0.0f32, 1.0]; 4]).unwrap();
        let s = log_likelihood_score(&ds, &q, &d, LikelihoodMode::PerRelevant).unwrap();
        assert_abs_diff_eq!(s, 0.25f64.ln(), epsilon = 1e-12);
    }
}

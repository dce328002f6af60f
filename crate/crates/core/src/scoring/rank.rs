use crate::adascale::weighted_dot;
use crate::data::{CandidateGroup, EmbeddingMatrix, RankingDataset};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// How a query and a document row are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Dot,
    /// Weighted dot product divided by the plain row norms.
    Cosine,
}

/// 1-based rank of the relevant candidate. Every other candidate scoring
/// at least as high counts ahead of it, so ties go against the relevant one.
pub fn rank_of_relevant(candidate_scores: &[f64], relevant_index: usize) -> usize {
    let target = candidate_scores[relevant_index];
    1 + candidate_scores
        .iter()
        .enumerate()
        .filter(|&(j, &s)| j != relevant_index && s >= target)
        .count()
}

pub(crate) fn check_inputs(
    dataset: &RankingDataset,
    query_emb: &EmbeddingMatrix,
    doc_emb: &EmbeddingMatrix,
    weights: Option<&[f64]>,
) -> Result<()> {
    if dataset.query_count() == 0 {
        return Err(Error::EmptyInput("dataset has no queries".into()));
    }
    if query_emb.dim() != doc_emb.dim() {
        return Err(Error::Shape(format!(
            "query dim {} differs from document dim {}",
            query_emb.dim(),
            doc_emb.dim()
        )));
    }
    if let Some(w) = weights {
        if w.len() != query_emb.dim() {
            return Err(Error::Shape(format!(
                "{} weights for {}-dimensional embeddings",
                w.len(),
                query_emb.dim()
            )));
        }
    }
    dataset.check_bounds(query_emb.rows(), doc_emb.rows())
}

pub(crate) fn group_scores(
    group: &CandidateGroup,
    query_emb: &EmbeddingMatrix,
    doc_emb: &EmbeddingMatrix,
    weights: Option<&[f64]>,
    similarity: Similarity,
    out: &mut Vec<f64>,
) {
    out.clear();
    let q = query_emb.row(group.query_row);
    let q_norm = match similarity {
        Similarity::Dot => 1.0,
        Similarity::Cosine => crate::numeric::dot_f32(q, q).sqrt(),
    };
    for d_row in group.candidates() {
        let d = doc_emb.row(d_row);
        let raw = weighted_dot(q, d, weights);
        let s = match similarity {
            Similarity::Dot => raw,
            Similarity::Cosine => {
                let denom = q_norm * crate::numeric::dot_f32(d, d).sqrt();
                if denom > 0.0 {
                    raw / denom
                } else {
                    0.0
                }
            }
        };
        out.push(s);
    }
}

/// Mean reciprocal rank of each query's relevant document within its
/// candidate group, scoring candidates by `Σ_k w_k q_k d_k` (plain dot
/// product when `weights` is `None`). Lies in `[1/k, 1]`.
pub fn expected_rank_score(
    dataset: &RankingDataset,
    query_emb: &EmbeddingMatrix,
    doc_emb: &EmbeddingMatrix,
    weights: Option<&[f64]>,
) -> Result<f64> {
    expected_rank_score_with(dataset, query_emb, doc_emb, weights, Similarity::Dot)
}

pub fn expected_rank_score_with(
    dataset: &RankingDataset,
    query_emb: &EmbeddingMatrix,
    doc_emb: &EmbeddingMatrix,
    weights: Option<&[f64]>,
    similarity: Similarity,
) -> Result<f64> {
    check_inputs(dataset, query_emb, doc_emb, weights)?;
    let mut total = CompensatedSum::default();
    let mut scores = Vec::with_capacity(dataset.k());
    for group in dataset.groups() {
        group_scores(group, query_emb, doc_emb, weights, similarity, &mut scores);
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite score for query {}",
                group.query_row
            )));
        }
        // One relevant document per group, at candidate index 0.
        total.add(1.0 / rank_of_relevant(&scores, 0) as f64);
    }
    Ok(total.value() / dataset.query_count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motivating_ranks() {
        assert_eq!(rank_of_relevant(&[0.5, 0.45, 0.45], 0), 1);
        assert_eq!(rank_of_relevant(&[0.6, 0.65, 0.1], 0), 2);
    }

    #[test]
    fn all_tied_is_last() {
        for r in 0..5 {
            assert_eq!(rank_of_relevant(&[0.3; 5], r), 5);
        }
    }

    fn one_group(k: usize) -> RankingDataset {
        RankingDataset::from_groups(vec![CandidateGroup {
            query_row: 0,
            relevant_row: 0,
            irrelevant_rows: (1..k).collect(),
        }])
        .unwrap()
    }

    #[test]
    fn rank_two_scores_half() {
        let ds = one_group(3);
        let q = EmbeddingMatrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
        let d = EmbeddingMatrix::from_rows(&[[0.5f32, 0.0], [0.9, 0.0], [0.1, 0.0]]).unwrap();
        assert_eq!(expected_rank_score(&ds, &q, &d, None).unwrap(), 0.5);
        // Flip the weight sign and the ordering reverses.
        assert_eq!(expected_rank_score(&ds, &q, &d, Some(&[-1.0, 1.0])).unwrap(), 0.5);
        assert_eq!(expected_rank_score(&ds, &q, &d, Some(&[0.0, 1.0])).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn strict_winner_scores_one() {
        let ds = one_group(2);
        let q = EmbeddingMatrix::from_rows(&[[1.0f32, 1.0]]).unwrap();
        let d = EmbeddingMatrix::from_rows(&[[1.0f32, 1.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(expected_rank_score(&ds, &q, &d, None).unwrap(), 1.0);
    }

    #[test]
    fn cosine_ignores_document_length() {
        let ds = one_group(2);
        let q = EmbeddingMatrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
        let d = EmbeddingMatrix::from_rows(&[[1.0f32, 0.1], [10.0, 5.0]]).unwrap();
        assert_eq!(expected_rank_score(&ds, &q, &d, None).unwrap(), 0.5);
        assert_eq!(
            expected_rank_score_with(&ds, &q, &d, None, Similarity::Cosine).unwrap(),
            1.0
        );
    }

    #[test]
    fn shape_errors() {
        let ds = one_group(2);
        let q = EmbeddingMatrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
        let d = EmbeddingMatrix::from_rows(&[[1.0f32], [2.0]]).unwrap();
        assert!(matches!(expected_rank_score(&ds, &q, &d, None), Err(Error::Shape(_))));
        let d2 = EmbeddingMatrix::from_rows(&[[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            expected_rank_score(&ds, &q, &d2, Some(&[1.0])),
            Err(Error::Shape(_))
        ));
        let d1 = EmbeddingMatrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
        assert!(matches!(expected_rank_score(&ds, &q, &d1, None), Err(Error::Shape(_))));
    }
}

//! Agreement between estimated transferability and ground truth.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::ModelPoolTruth;
use crate::error::{Error, Result};
use crate::scoring::TransferabilityReport;

fn check_lengths(s: &[f64], t: &[f64]) -> Result<()> {
    if s.len() != t.len() {
        return Err(Error::Shape(format!(
            "{} scores but {} ground truths",
            s.len(),
            t.len()
        )));
    }
    if s.len() < 2 {
        return Err(Error::Shape(format!("need at least 2 models, got {}", s.len())));
    }
    Ok(())
}

#[inline]
fn indicator(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

/// `τ = 2 Σ_{i<j} 𝕀(T_i − T_j) 𝕀(S_i − S_j) / (M(M − 1))` where `𝕀(x)` is
/// 1 for positive `x` and −1 otherwise, zero included. With ties the value
/// depends on model order; use [`kendall_tau_b`] for a tie-aware figure.
pub fn kendall_tau(s: &[f64], t: &[f64]) -> Result<f64> {
    check_lengths(s, t)?;
    let m = s.len();
    let mut sum: i64 = 0;
    for i in 0..m {
        for j in i + 1..m {
            sum += indicator(t[i] - t[j]) * indicator(s[i] - s[j]);
        }
    }
    Ok(2.0 * sum as f64 / (m * (m - 1)) as f64)
}

fn tied_pairs<F: Fn(usize, usize) -> bool>(n: usize, same: F) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for i in 1..n {
        if same(i - 1, i) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort of `idx` by `key`, returning the number of inversions.
fn sort_counting_swaps(idx: &mut [usize], key: &[f64], buf: &mut Vec<usize>) -> u64 {
    let n = idx.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut idx[..mid], key, buf) + sort_counting_swaps(&mut idx[mid..], key, buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if key[idx[j]].total_cmp(&key[idx[i]]) == Ordering::Less {
            buf.push(idx[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(idx[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&idx[i..mid]);
    buf.extend_from_slice(&idx[j..n]);
    idx.copy_from_slice(buf);
    swaps
}

/// Tie-corrected Kendall τ-b in `O(M log M)` (Knight's algorithm).
/// Returns 0 when either input is constant.
pub fn kendall_tau_b(s: &[f64], t: &[f64]) -> Result<f64> {
    check_lengths(s, t)?;
    let n = s.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(t[a].total_cmp(&t[b])));

    let n0 = (n * (n - 1) / 2) as u64;
    let ties_s = tied_pairs(n, |a, b| s[idx[a]] == s[idx[b]]);
    let ties_joint = tied_pairs(n, |a, b| s[idx[a]] == s[idx[b]] && t[idx[a]] == t[idx[b]]);
    let mut buf = Vec::with_capacity(n);
    let swaps = sort_counting_swaps(&mut idx, t, &mut buf);
    let ties_t = tied_pairs(n, |a, b| t[idx[a]] == t[idx[b]]);

    let denom = ((n0 - ties_s) as f64 * (n0 - ties_t) as f64).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let numer = n0 as f64 - ties_s as f64 - ties_t as f64 + ties_joint as f64 - 2.0 * swaps as f64;
    Ok(numer / denom)
}

/// 1-based position the scores give the truly best model (first index on
/// ties in `t`); only strictly higher scores count ahead of it.
pub fn estimated_rank_of_best(s: &[f64], t: &[f64]) -> Result<usize> {
    check_lengths(s, t)?;
    let best = (1..t.len()).fold(0, |b, i| if t[i] > t[b] { i } else { b });
    Ok(1 + s.iter().enumerate().filter(|&(i, &v)| i != best && v > s[best]).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tau: f64,
    pub tau_b: f64,
    pub best_model_estimated_rank: usize,
    #[serde(rename = "M")]
    pub model_count: usize,
}

pub fn evaluate(s: &[f64], t: &[f64]) -> Result<EvalReport> {
    Ok(EvalReport {
        tau: kendall_tau(s, t)?,
        tau_b: kendall_tau_b(s, t)?,
        best_model_estimated_rank: estimated_rank_of_best(s, t)?,
        model_count: s.len(),
    })
}

/// Pairs report and truth by model id (in sorted id order, so the result
/// does not depend on file order) and evaluates them.
pub fn evaluate_report(report: &TransferabilityReport, truth: &ModelPoolTruth) -> Result<EvalReport> {
    let in_report: BTreeSet<&str> = report.scores.iter().map(|s| s.model.as_str()).collect();
    let in_truth: BTreeSet<&str> = truth.models.iter().map(|m| m.id.as_str()).collect();
    if in_report != in_truth {
        return Err(Error::IdMismatch {
            only_in_report: in_report.difference(&in_truth).map(|s| s.to_string()).collect(),
            only_in_truth: in_truth.difference(&in_report).map(|s| s.to_string()).collect(),
        });
    }
    let (mut s, mut t) = (Vec::new(), Vec::new());
    for id in &in_report {
        s.push(report.score_of(id).expect("id present"));
        t.push(truth.score_of(id).expect("id present"));
    }
    evaluate(&s, &t)
}

//! Per-dimension scaling weights fit by regularized least squares.
//!
//! With whitened query rows `q̂` and document rows `d̂`, scaling both by
//! `γ` predicts the pair score `Σ_k γ_k² q̂_k d̂_k`, which is linear in
//! `w = γ²`. Stacking the pair features `Ê_m = Ê_q ⊙ Ê_d` gives the ridge
//! problem `min_w ‖Ê_m w − Y‖² + λ‖w‖²`, solved from the normal
//! equations. Downstream scoring uses `w` itself; its components may be
//! negative, so no square root is taken.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{load_matrix, save_matrix, EmbeddingMatrix, RankingDataset};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA_REL: f64 = 1e-6;

/// Which factorization produced the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverPath {
    Cholesky,
    Eigen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingWeights {
    pub weights: Vec<f64>,
    pub lambda_used: f64,
    pub residual_norm: f64,
    pub solver: SolverPath,
}

/// Row `i` is the elementwise product of pair `i`'s query and document rows.
pub fn hadamard_pairs(
    whitened_queries: &EmbeddingMatrix,
    whitened_docs: &EmbeddingMatrix,
    dataset: &RankingDataset,
) -> Result<EmbeddingMatrix> {
    let d = whitened_queries.dim();
    if whitened_docs.dim() != d {
        return Err(Error::Shape(format!(
            "query dim {d} differs from document dim {}",
            whitened_docs.dim()
        )));
    }
    dataset.check_bounds(whitened_queries.rows(), whitened_docs.rows())?;
    let mut values = Vec::with_capacity(dataset.pair_count() * d);
    for p in dataset.pairs() {
        let q = whitened_queries.row(p.query_row);
        let doc = whitened_docs.row(p.doc_row);
        values.extend(q.iter().zip(doc).map(|(a, b)| a * b));
    }
    EmbeddingMatrix::new(dataset.pair_count(), d, values).map_err(|e| match e {
        Error::NonFinite { row, col } => Error::Numeric(format!("pair feature ({row}, {col}) overflowed")),
        other => other,
    })
}

fn design(features: &EmbeddingMatrix) -> DMatrix<f64> {
    DMatrix::from_row_iterator(
        features.rows(),
        features.dim(),
        features.values().iter().map(|&v| f64::from(v)),
    )
}

/// In-place lower Cholesky factor of a row-major SPD matrix. Fails when a
/// pivot is not clearly positive relative to `tol`.
fn cholesky(a: &mut [f64], n: usize, tol: f64) -> bool {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if diag.is_nan() || diag <= tol {
            return false;
        }
        let l_jj = diag.sqrt();
        a[j * n + j] = l_jj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l_jj;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    x
}

/// Solves `(Ê_mᵀÊ_m + λI) w = Ê_mᵀ Y` with `λ = lambda_rel · trace(Ê_mᵀÊ_m)/D`.
///
/// Cholesky runs first; if the regularized Gram matrix is not numerically
/// positive definite the solve falls back to an eigendecomposition, and
/// fails with [`Error::Singular`] if that is rank-deficient too.
pub fn solve_scaling(pair_features: &EmbeddingMatrix, labels: &[f64], lambda_rel: f64) -> Result<ScalingWeights> {
    let (n, d) = (pair_features.rows(), pair_features.dim());
    if labels.len() != n {
        return Err(Error::Shape(format!("{n} feature rows but {} labels", labels.len())));
    }
    if !(lambda_rel >= 0.0 && lambda_rel.is_finite()) {
        return Err(Error::Config(format!(
            "lambda_rel must be non-negative, got {lambda_rel}"
        )));
    }
    let x = design(pair_features);
    let y = DVector::from_column_slice(labels);
    let gram = x.tr_mul(&x);
    let rhs = x.tr_mul(&y);
    if gram.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("normal equations contain non-finite entries".into()));
    }
    let lambda = lambda_rel * gram.trace() / d as f64;

    let mut a: Vec<f64> = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            a.push(gram[(i, j)] + if i == j { lambda } else { 0.0 });
        }
    }
    let max_diag = (0..d).map(|i| a[i * d + i]).fold(0.0f64, f64::max);
    let tol = d as f64 * f64::EPSILON * max_diag;
    let rhs: Vec<f64> = rhs.iter().copied().collect();

    let mut factor = a.clone();
    let (weights, solver) = if max_diag > 0.0 && cholesky(&mut factor, d, tol) {
        (cholesky_solve(&factor, d, &rhs), SolverPath::Cholesky)
    } else {
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &a));
        let top = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        let floor = d as f64 * f64::EPSILON * top;
        if top <= 0.0 || eig.eigenvalues.iter().any(|&v| v <= floor) {
            return Err(Error::Singular(format!(
                "pair-feature Gram matrix (D = {d}, N = {n}, lambda = {lambda:e}) is rank-deficient"
            )));
        }
        let proj = eig.eigenvectors.tr_mul(&DVector::from_column_slice(&rhs));
        let scaled = DVector::from_iterator(d, proj.iter().zip(eig.eigenvalues.iter()).map(|(p, l)| p / l));
        let w = &eig.eigenvectors * scaled;
        (w.iter().copied().collect(), SolverPath::Eigen)
    };
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numeric("scaling weights are not finite".into()));
    }
    let residual = &x * DVector::from_column_slice(&weights) - &y;
    Ok(ScalingWeights {
        weights,
        lambda_used: lambda,
        residual_norm: residual.norm(),
        solver,
    })
}

/// `‖Ê_m w − Y‖² + λ‖w‖²`.
pub fn regularized_loss(pair_features: &EmbeddingMatrix, labels: &[f64], weights: &[f64], lambda: f64) -> f64 {
    let fit: f64 = pair_features
        .iter_rows()
        .zip(labels)
        .map(|(row, y)| {
            let pred: f64 = row.iter().zip(weights).map(|(&f, w)| f64::from(f) * w).sum();
            (pred - y).powi(2)
        })
        .sum();
    fit + lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`regularized_loss`]: `2Ê_mᵀÊ_m w − 2Ê_mᵀY + 2λw`.
pub fn loss_gradient(pair_features: &EmbeddingMatrix, labels: &[f64], weights: &[f64], lambda: f64) -> Vec<f64> {
    let x = design(pair_features);
    let w = DVector::from_column_slice(weights);
    let y = DVector::from_column_slice(labels);
    let g = x.tr_mul(&(&x * &w)) * 2.0 - x.tr_mul(&y) * 2.0 + w * (2.0 * lambda);
    g.iter().copied().collect()
}

#[inline]
pub(crate) fn weighted_dot(query: &[f32], doc: &[f32], weights: Option<&[f64]>) -> f64 {
    match weights {
        Some(w) => query
            .iter()
            .zip(doc)
            .zip(w)
            .map(|((&q, &d), w)| w * f64::from(q) * f64::from(d))
            .sum(),
        None => crate::numeric::dot_f32(query, doc),
    }
}

/// `Σ_k w_k q_k d_k`.
pub fn weighted_score(query_row: &[f32], doc_row: &[f32], weights: &[f64]) -> Result<f64> {
    if query_row.len() != doc_row.len() || weights.len() != query_row.len() {
        return Err(Error::Shape(format!(
            "query {}, document {} and weights {} must share one dimension",
            query_row.len(),
            doc_row.len(),
            weights.len()
        )));
    }
    Ok(weighted_dot(query_row, doc_row, Some(weights)))
}

#[derive(Serialize, Deserialize)]
struct ScalingSidecar {
    lambda_used: f64,
    residual_norm: f64,
}

pub fn scaling_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let with = |suffix: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with(".weights.mat"), with(".json"))
}

impl ScalingWeights {
    /// Writes `<stem>.weights.mat` (1×D, narrowed to f32) and a `<stem>.json` sidecar.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let (mat, json) = scaling_paths(stem);
        save_matrix(&EmbeddingMatrix::from_f64(1, self.weights.len(), &self.weights)?, &mat)?;
        let file = File::create(&json).map_err(|source| Error::Io { offset: 0, source })?;
        let sidecar = ScalingSidecar {
            lambda_used: self.lambda_used,
            residual_norm: self.residual_norm,
        };
        serde_json::to_writer_pretty(BufWriter::new(file), &sidecar).map_err(|e| Error::Format(e.to_string()))
    }

    /// Loading cannot recover which solver ran; it reports `Cholesky`.
    pub fn load(stem: &Path) -> Result<Self> {
        let (mat, json) = scaling_paths(stem);
        let w = load_matrix(&mat)?;
        if w.rows() != 1 {
            return Err(Error::Shape(format!("weights file has {} rows, expected 1", w.rows())));
        }
        let file = File::open(&json).map_err(|source| Error::Io { offset: 0, source })?;
        let sidecar: ScalingSidecar =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Format(e.to_string()))?;
        Ok(ScalingWeights {
            weights: w.values().iter().map(|&v| f64::from(v)).collect(),
            lambda_used: sidecar.lambda_used,
            residual_norm: sidecar.residual_norm,
            solver: SolverPath::Cholesky,
        })
    }
}

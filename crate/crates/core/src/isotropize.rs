//! Whitening of sentence embeddings.
//!
//! Given stacked embeddings `E` (one row per query and per document of
//! every pair), the fit estimates the mean `μ`, the jittered covariance
//! `Σ = (E − 1μ)ᵀ(E − 1μ)/(n − 1) + εI`, and its eigendecomposition
//! `Σ = UΛUᵀ`. Applying the model maps `x ↦ (x − μ)·UΛ^(−1/2)`, after
//! which the fitting data has identity covariance.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{load_matrix, save_matrix, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

pub const DEFAULT_EPSILON_REL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningModel {
    mean: Vec<f64>,
    /// `D×D`, row-major; column `j` is `u_j / sqrt(λ_j)`.
    transform: Vec<f64>,
    eigenvalues: Vec<f64>,
    epsilon_used: f64,
}

impl WhiteningModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn transform(&self) -> &[f64] {
        &self.transform
    }

    /// Eigenvalues of the jittered covariance, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn epsilon_used(&self) -> f64 {
        self.epsilon_used
    }

    /// Orthonormal eigenvectors as columns of a row-major `D×D` matrix.
    pub fn eigenvectors(&self) -> Vec<f64> {
        let d = self.dim();
        let mut u = self.transform.clone();
        for row in u.chunks_exact_mut(d) {
            for (x, lam) in row.iter_mut().zip(&self.eigenvalues) {
                *x *= lam.sqrt();
            }
        }
        u
    }

    /// `UΛUᵀ`, row-major.
    pub fn reconstructed_covariance(&self) -> Vec<f64> {
        let d = self.dim();
        let u = self.eigenvectors();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = (0..d).map(|c| u[i * d + c] * self.eigenvalues[c] * u[j * d + c]).sum();
            }
        }
        out
    }
}

/// Column mean and unjittered sample covariance (divisor `n − 1`), both
/// accumulated with compensated summation.
fn mean_and_covariance(stacked: &EmbeddingMatrix) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (stacked.rows(), stacked.dim());
    let mut col_sums = vec![CompensatedSum::default(); d];
    for row in stacked.iter_rows() {
        for (acc, &x) in col_sums.iter_mut().zip(row) {
            acc.add(f64::from(x));
        }
    }
    let mean: Vec<f64> = col_sums.iter().map(|s| s.value() / n as f64).collect();

    // Upper triangle only.
    let mut gram = vec![CompensatedSum::default(); d * d];
    let mut centered = vec![0.0; d];
    for row in stacked.iter_rows() {
        for ((c, &x), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = f64::from(x) - m;
        }
        for i in 0..d {
            let ci = centered[i];
            let acc_row = &mut gram[i * d..(i + 1) * d];
            for j in i..d {
                acc_row[j].add(ci * centered[j]);
            }
        }
    }
    let mut cov = vec![0.0; d * d];
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = gram[i * d + j].value() / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    (mean, cov)
}

/// Fits a whitening model on the stacked query and document embeddings.
///
/// The jitter is relative: `ε = epsilon_rel · trace(Σ₀)/D`, where `Σ₀` is
/// the unjittered covariance. When `Σ₀` is exactly zero (every row equal)
/// the scale falls back to 1, so `ε = epsilon_rel`.
///
/// Eigenvalues are sorted descending and each eigenvector is signed so its
/// largest-magnitude entry is positive. Eigenvalues are floored at `ε` to
/// absorb rounding below the jitter.
pub fn fit_whitening(stacked: &EmbeddingMatrix, epsilon_rel: f64) -> Result<WhiteningModel> {
    if stacked.rows() < 2 {
        return Err(Error::Degenerate(format!(
            "whitening needs at least 2 rows, got {}",
            stacked.rows()
        )));
    }
    if !(epsilon_rel > 0.0 && epsilon_rel.is_finite()) {
        return Err(Error::Config(format!(
            "epsilon_rel must be positive, got {epsilon_rel}"
        )));
    }
    let d = stacked.dim();
    let (mean, mut cov) = mean_and_covariance(stacked);
    if let Some(pos) = cov.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "covariance entry ({}, {}) is not finite",
            pos / d,
            pos % d
        )));
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let scale = if trace > 0.0 { trace / d as f64 } else { 1.0 };
    let epsilon = epsilon_rel * scale;
    for i in 0..d {
        cov[i * d + i] += epsilon;
    }

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &cov));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut eigenvalues = Vec::with_capacity(d);
    let mut transform = vec![0.0; d * d];
    for (col, &src) in order.iter().enumerate() {
        let lam = eig.eigenvalues[src].max(epsilon);
        if !lam.is_finite() {
            return Err(Error::Numeric(
                "eigendecomposition produced a non-finite eigenvalue".into(),
            ));
        }
        let v = eig.eigenvectors.column(src);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let inv_root = 1.0 / lam.sqrt();
        for row in 0..d {
            transform[row * d + col] = sign * v[row] * inv_root;
        }
        eigenvalues.push(lam);
    }
    Ok(WhiteningModel {
        mean,
        transform,
        eigenvalues,
        epsilon_used: epsilon,
    })
}

/// Computes `(X − 1μ)·W` for every row of `matrix`.
pub fn apply_whitening(model: &WhiteningModel, matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let d = model.dim();
    if matrix.dim() != d {
        return Err(Error::Shape(format!(
            "whitening model has dim {d}, matrix has dim {}",
            matrix.dim()
        )));
    }
    let centered = DMatrix::from_fn(matrix.rows(), d, |r, c| f64::from(matrix.get(r, c)) - model.mean[c]);
    let w = DMatrix::from_row_slice(d, d, &model.transform);
    let out = centered * w;
    let mut values = Vec::with_capacity(matrix.rows() * d);
    for r in 0..matrix.rows() {
        values.extend((0..d).map(|c| out[(r, c)] as f32));
    }
    EmbeddingMatrix::new(matrix.rows(), d, values).map_err(|e| match e {
        Error::NonFinite { row, col } => {
            Error::Numeric(format!("whitened value at row {row}, col {col} overflowed f32"))
        }
        other => other,
    })
}

#[derive(Serialize, Deserialize)]
struct WhiteningSidecar {
    epsilon_used: f64,
    eigenvalues: Vec<f64>,
}

/// File paths for a saved whitening model sharing one stem.
pub fn whitening_paths(stem: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let with = |suffix: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with(".mean.mat"), with(".transform.mat"), with(".json"))
}

impl WhiteningModel {
    /// Writes `<stem>.mean.mat` (1×D), `<stem>.transform.mat` (D×D) and a
    /// `<stem>.json` sidecar. Matrix files hold `f32`, so the mean and
    /// transform are narrowed on save.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let d = self.dim();
        let (mean_path, transform_path, json_path) = whitening_paths(stem);
        save_matrix(&EmbeddingMatrix::from_f64(1, d, &self.mean)?, &mean_path)?;
        save_matrix(&EmbeddingMatrix::from_f64(d, d, &self.transform)?, &transform_path)?;
        let file = File::create(&json_path).map_err(|source| Error::Io { offset: 0, source })?;
        let sidecar = WhiteningSidecar {
            epsilon_used: self.epsilon_used,
            eigenvalues: self.eigenvalues.clone(),
        };
        serde_json::to_writer_pretty(BufWriter::new(file), &sidecar).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let (mean_path, transform_path, json_path) = whitening_paths(stem);
        let mean = load_matrix(&mean_path)?;
        let transform = load_matrix(&transform_path)?;
        let file = File::open(&json_path).map_err(|source| Error::Io { offset: 0, source })?;
        let sidecar: WhiteningSidecar =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Format(e.to_string()))?;
        let d = mean.dim();
        if mean.rows() != 1 || transform.rows() != d || transform.dim() != d || sidecar.eigenvalues.len() != d {
            return Err(Error::Shape("whitening model parts disagree on dimension".into()));
        }
        Ok(WhiteningModel {
            mean: mean.values().iter().map(|&v| f64::from(v)).collect(),
            transform: transform.values().iter().map(|&v| f64::from(v)).collect(),
            eigenvalues: sidecar.eigenvalues,
            epsilon_used: sidecar.epsilon_used,
        })
    }
}

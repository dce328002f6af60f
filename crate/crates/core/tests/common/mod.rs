#![allow(dead_code)]

use airtran::data::EmbeddingMatrix;
use airtran::rng::Prng;
use nalgebra::DMatrix;

pub fn gaussian_matrix(rng: &mut Prng, rows: usize, cols: usize) -> EmbeddingMatrix {
    let values = (0..rows * cols).map(|_| rng.gaussian() as f32).collect();
    EmbeddingMatrix::new(rows, cols, values).unwrap()
}

pub fn to_dmatrix(m: &EmbeddingMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.dim(), |r, c| f64::from(m.get(r, c)))
}

/// Sample covariance by the textbook two-pass formula, no compensation.
pub fn naive_covariance(m: &EmbeddingMatrix) -> DMatrix<f64> {
    let x = to_dmatrix(m);
    let n = x.nrows() as f64;
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| x[(r, c)] - mean[c]);
    centered.transpose() * centered / (n - 1.0)
}

/// Cyclic Jacobi eigenvalue iteration for symmetric matrices.
/// Returns eigenvalues sorted descending with matching eigenvector columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off.sqrt() < 1e-14 * a.norm() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Data with a prescribed population spectrum under a random rotation.
pub fn anisotropic_gaussian(rng: &mut Prng, rows: usize, spectrum: &[f64]) -> EmbeddingMatrix {
    let d = spectrum.len();
    let g = DMatrix::from_fn(d, d, |_, _| rng.gaussian());
    let q = g.qr().q();
    let scale = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, spectrum.iter().map(|l| l.sqrt())));
    let mix = scale * q.transpose();
    let z = DMatrix::from_fn(rows, d, |_, _| rng.gaussian());
    let x = z * mix;
    let values = (0..rows)
        .flat_map(|r| (0..d).map(move |c| (r, c)))
        .map(|(r, c)| x[(r, c)] as f32)
        .collect();
    EmbeddingMatrix::new(rows, d, values).unwrap()
}

/// Log-uniform spectrum from 1 to `condition`, endpoints included.
pub fn log_spectrum(d: usize, condition: f64) -> Vec<f64> {
    (0..d).map(|i| condition.powf(i as f64 / (d - 1) as f64)).collect()
}

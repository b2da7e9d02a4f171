//! Principal component analysis via Jacobi eigendecomposition of the
//! sample covariance. Components are ordered by descending eigenvalue
//! with each component's largest-magnitude entry made positive, so a fit
//! on given data is unique and reproducible.

use crate::error::{DspError, DspResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row-major projection matrix, `output_dim` rows of `input_dim`.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    /// Projection that keeps the first `output_dim` coordinates unchanged
    /// (zero mean, identity rows). Useful as a test double.
    pub fn identity(input_dim: usize, output_dim: usize) -> PcaModel {
        let components = (0..output_dim)
            .map(|i| {
                let mut row = vec![0.0; input_dim];
                row[i] = 1.0;
                row
            })
            .collect();
        PcaModel {
            mean: vec![0.0; input_dim],
            components,
            eigenvalues: vec![1.0; output_dim],
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.input_dim());
        self.components
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (v, m))| c * (v - m))
                    .sum()
            })
            .collect()
    }
}

/// Fit the top `output_dim` principal components of `rows`.
pub fn fit_pca(rows: &[Vec<f64>], output_dim: usize) -> DspResult<PcaModel> {
    let n = rows.len();
    if n < 2 {
        return Err(DspError::Rank("need at least 2 training rows".into()));
    }
    let d = rows[0].len();
    if output_dim > d {
        return Err(DspError::Rank(format!(
            "cannot keep {output_dim} components of {d}-dimensional data"
        )));
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(DspError::Rank("ragged feature rows".into()));
    }

    let mut mean = vec![0.0f64; d];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    // sample covariance
    let mut cov = vec![vec![0.0f64; d]; d];
    for row in rows {
        let centered: Vec<f64> = row.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[i][j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }

    let (mut eigvals, mut eigvecs) = jacobi_eigen(cov);

    // sort descending by eigenvalue
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap());
    eigvals = order.iter().map(|&i| eigvals[i]).collect();
    eigvecs = order.iter().map(|&i| eigvecs[i].clone()).collect();

    let lambda_max = eigvals[0].max(0.0);
    let tol = lambda_max * 1e-9 + 1e-12;
    if eigvals[output_dim - 1] <= tol {
        return Err(DspError::Rank(format!(
            "training data has rank below {output_dim} (eigenvalue {} <= {tol:.3e})",
            eigvals[output_dim - 1]
        )));
    }

    // sign convention: largest-magnitude entry of each component positive
    let mut components = eigvecs;
    components.truncate(output_dim);
    for row in components.iter_mut() {
        let (mut best, mut best_abs) = (0usize, 0.0f64);
        for (i, &v) in row.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if row[best] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    eigvals.truncate(output_dim);

    Ok(PcaModel {
        mean,
        components,
        eigenvalues: eigvals,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns (eigenvalues, eigenvectors as rows), unordered.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    // v starts as identity; accumulates rotations as columns
    let mut v = vec![vec![0.0f64; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let off = |a: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                s += a[i][j] * a[i][j];
            }
        }
        s
    };
    let norm: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().max(1e-300);
    for _sweep in 0..100 {
        if off(&a) < 1e-24 * norm {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigvals: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
    // eigenvector i is column i of v; return as rows
    let eigvecs: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|k| v[k][i]).collect()).collect();
    (eigvals, eigvecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_axis_dominates() {
        // points along (1,1) with small orthogonal jitter
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let t = (i as f64 / 100.0) - 1.0;
                let jitter = ((i * 37 % 13) as f64 - 6.0) * 1e-3;
                vec![t + jitter, t - jitter]
            })
            .collect();
        let pca = fit_pca(&rows, 1).unwrap();
        let c = &pca.components[0];
        let unit = 1.0 / 2f64.sqrt();
        assert!((c[0] - unit).abs() < 1e-2, "component {c:?}");
        assert!((c[1] - unit).abs() < 1e-2, "component {c:?}");
    }

    #[test]
    fn components_are_orthonormal() {
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let x = (i as f64 * 0.7).sin();
                let y = (i as f64 * 1.3).cos();
                let z = (i as f64 * 2.1).sin() * 0.5;
                vec![x, y, z, x + 0.3 * y]
            })
            .collect();
        let pca = fit_pca(&rows, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = pca.components[i]
                    .iter()
                    .zip(&pca.components[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-6, "({i},{j}) dot = {dot}");
            }
        }
    }

    #[test]
    fn training_mean_projects_to_zero() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64, (i * i % 17) as f64, 3.0 - i as f64 * 0.1])
            .collect();
        let pca = fit_pca(&rows, 2).unwrap();
        let projected = pca.project(&pca.mean.clone());
        for v in projected {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn rank_deficient_input_is_rank_error() {
        // all rows identical in the second coordinate: rank 1 < 2
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, 5.0]).collect();
        assert!(matches!(fit_pca(&rows, 2), Err(DspError::Rank(_))));
    }

    #[test]
    fn identity_pca_keeps_leading_coordinates() {
        let pca = PcaModel::identity(5, 3);
        let out = pca.project(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(out, vec![1.0, 2.0, 3.0]);
    }
}

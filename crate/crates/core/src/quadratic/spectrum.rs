//! Cyclic Jacobi eigendecomposition of the quadratic part.

use serde::{Deserialize, Serialize};

use super::Quadratic;
use crate::error::{Error, Result};

/// Convergence: off-diagonal Frobenius mass below this fraction of `‖A‖_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues sorted by decreasing magnitude (ties keep their original
/// order) with the matching orthonormal eigenvectors as columns of `basis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Row-major `n × n`; column `k` is the eigenvector of `eigenvalues[k]`.
    pub basis: Vec<f64>,
    pub sweeps: usize,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.basis[i * n + k]).collect()
    }

    /// `Uᵀ v`: coordinates of `v` in the eigenbasis.
    pub fn to_eigen(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let row = &self.basis[i * n..(i + 1) * n];
            for (o, &u) in out.iter_mut().zip(row) {
                *o += u * vi;
            }
        }
        out
    }

    /// `U w`: back to original coordinates.
    pub fn from_eigen(&self, w: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let row = &self.basis[i * n..(i + 1) * n];
                row.iter().zip(w).map(|(u, x)| u * x).sum()
            })
            .collect()
    }

    /// Spectrum of `factor · A`, for `factor > 0` (the ordering is unchanged).
    pub fn scaled(&self, factor: f64) -> Spectrum {
        assert!(factor > 0.0, "scale factor must be positive");
        Spectrum {
            eigenvalues: self.eigenvalues.iter().map(|l| l * factor).collect(),
            basis: self.basis.clone(),
            sweeps: self.sweeps,
        }
    }

    /// The polynomial rewritten in eigen-coordinates: diagonal `A`, rotated `b`.
    pub fn diagonal_form(&self, q: &Quadratic) -> Result<Quadratic> {
        Quadratic::diagonal(&self.eigenvalues, self.to_eigen(q.linear_part()), q.constant_term())
    }
}

/// Diagonalizes the quadratic part of `q` by cyclic Jacobi rotations.
///
/// Fails with [`Error::NumericFailure`] if the off-diagonal mass has not
/// dropped below `JACOBI_TOLERANCE · ‖A‖_F` after `JACOBI_MAX_SWEEPS` sweeps.
pub fn eigendecompose(q: &Quadratic) -> Result<Spectrum> {
    let n = q.dim();
    let mut a = q.matrix().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOLERANCE * frob;

    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += a[p * n + q] * a[p * n + q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    loop {
        if frob == 0.0 || off_norm(&a) <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NumericFailure(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (n = {n})"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for r in p + 1..n {
                let apr = a[p * n + r];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[r * n + r] - a[p * n + p]) / (2.0 * apr);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns p, r
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akr = a[k * n + r];
                    a[k * n + p] = c * akp - s * akr;
                    a[k * n + r] = s * akp + c * akr;
                }
                // rows p, r
                for k in 0..n {
                    let apk = a[p * n + k];
                    let ark = a[r * n + k];
                    a[p * n + k] = c * apk - s * ark;
                    a[r * n + k] = s * apk + c * ark;
                }
                a[p * n + r] = 0.0;
                a[r * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkr = v[k * n + r];
                    v[k * n + p] = c * vkp - s * vkr;
                    v[k * n + r] = s * vkp + c * vkr;
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal magnitudes keep original index order
    order.sort_by(|&i, &j| diag[j].abs().total_cmp(&diag[i].abs()));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut basis = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            basis[row * n + col] = v[row * n + src];
        }
    }
    Ok(Spectrum {
        eigenvalues,
        basis,
        sweeps,
    })
}

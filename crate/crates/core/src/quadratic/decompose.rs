//! Splitting a (restricted) quadratic into `p₀(x·v₁,…,x·v_r) + x·v + q(x)`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::{eigendecompose, Quadratic, Spectrum};
use crate::error::{invalid, Error, Result};

/// Default cutoff constant for "bad" coordinates.
pub const DEFAULT_KAPPA: f64 = 0.25;

/// Result of [`decompose_approx_linear`].
///
/// Coordinates are indexed in eigen order (decreasing `|eigenvalue|`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxLinearDecomposition {
    /// Eigen-coordinates absorbed into `p₀`, at most `r` of them.
    pub absorbed: Vec<usize>,
    /// Linear part off the absorbed set, in original coordinates.
    pub v: Vec<f64>,
    /// `|q|₂` of the quadratic remainder off the absorbed set.
    pub residual_norm: f64,
    pub v_norm: f64,
    /// `residual_norm / v_norm`; 0 when there is no remainder, `+∞` when
    /// a remainder sits on a vanishing linear part.
    pub ratio: f64,
    spectrum: Spectrum,
    /// Linear coefficients in eigen-coordinates.
    linear_eigen: Vec<f64>,
    constant: f64,
}

impl ApproxLinearDecomposition {
    /// The linear forms `x·v_i` that `p₀` depends on.
    pub fn forms(&self) -> Vec<Vec<f64>> {
        self.absorbed.iter().map(|&k| self.spectrum.vector(k)).collect()
    }

    fn in_set(&self) -> Vec<bool> {
        let mut mask = vec![false; self.spectrum.dim()];
        for &k in &self.absorbed {
            mask[k] = true;
        }
        mask
    }

    fn projector_sum(&self, keep: impl Fn(usize) -> bool) -> impl Fn(usize, usize) -> f64 + '_ {
        let n = self.spectrum.dim();
        let picked: Vec<usize> = (0..n).filter(|&k| keep(k) && self.spectrum.eigenvalues[k] != 0.0).collect();
        move |i, j| {
            picked
                .iter()
                .map(|&k| self.spectrum.eigenvalues[k] * self.spectrum.basis[i * n + k] * self.spectrum.basis[j * n + k])
                .sum()
        }
    }

    /// `p₀`: everything on the absorbed coordinates plus all constants.
    pub fn p0(&self) -> Result<Quadratic> {
        let n = self.spectrum.dim();
        let mask = self.in_set();
        let b_eig: Vec<f64> = (0..n).map(|k| if mask[k] { self.linear_eigen[k] } else { 0.0 }).collect();
        let shift: f64 = (0..n).filter(|&k| !mask[k]).map(|k| self.spectrum.eigenvalues[k]).sum();
        Quadratic::from_fn(n, self.projector_sum(|k| mask[k]), self.spectrum.from_eigen(&b_eig), self.constant + shift)
    }

    /// `q`: the mean-zero quadratic remainder `Σ_{k∉S} λ_k (y_k² − 1)`.
    pub fn residual(&self) -> Result<Quadratic> {
        let n = self.spectrum.dim();
        let mask = self.in_set();
        let shift: f64 = (0..n).filter(|&k| !mask[k]).map(|k| self.spectrum.eigenvalues[k]).sum();
        Quadratic::from_fn(n, self.projector_sum(|k| !mask[k]), vec![0.0; n], -shift)
    }

    /// `x·v` as a polynomial.
    pub fn linear(&self) -> Result<Quadratic> {
        Quadratic::linear(self.v.clone(), 0.0)
    }
}

/// Approximate-linearity decomposition of `q`, the restriction of some `p` at
/// scale `delta`.
///
/// In eigen-coordinates `q = Σ_k λ_k y_k² + C_k y_k + c`. The unrestricted
/// curvature of coordinate `k` is `a_k = λ_k / δ²`, and `k` is *bad* when
/// `|C_k| < kappa · δ · |a_k|`. The first `r` bad coordinates (in eigen order)
/// are absorbed into `p₀`; the rest contribute `C_k` to `v` and `λ_k h₂` terms
/// to the remainder.
pub fn decompose_approx_linear(q: &Quadratic, r: usize, delta: f64, kappa: f64) -> Result<ApproxLinearDecomposition> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(kappa > 0.0) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    decompose_with_spectrum(q, eigendecompose(q)?, r, delta, kappa)
}

/// As [`decompose_approx_linear`], reusing a precomputed eigendecomposition
/// of `q`'s quadratic part. Restrictions share their eigenbasis with the
/// original polynomial, so repeated restrictions only need the spectrum scaled.
pub fn decompose_with_spectrum(
    q: &Quadratic,
    spectrum: Spectrum,
    r: usize,
    delta: f64,
    kappa: f64,
) -> Result<ApproxLinearDecomposition> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(kappa > 0.0) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    let n = q.dim();
    if spectrum.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: spectrum.dim(),
        });
    }
    let linear_eigen = spectrum.to_eigen(q.linear_part());

    let mut absorbed = Vec::new();
    for k in 0..n {
        if absorbed.len() == r {
            break;
        }
        let lambda = spectrum.eigenvalues[k];
        let curvature = lambda.abs() / (delta * delta);
        if linear_eigen[k].abs() < kappa * delta * curvature {
            absorbed.push(k);
        }
    }

    let mut mask = vec![false; n];
    for &k in &absorbed {
        mask[k] = true;
    }
    let v_eig: Vec<f64> = (0..n).map(|k| if mask[k] { 0.0 } else { linear_eigen[k] }).collect();
    let v_norm = v_eig.iter().map(|c| c * c).sum::<f64>().sqrt();
    let residual_norm = SQRT_2
        * (0..n)
            .filter(|&k| !mask[k])
            .map(|k| spectrum.eigenvalues[k].powi(2))
            .sum::<f64>()
            .sqrt();
    let ratio = if residual_norm == 0.0 {
        0.0
    } else if v_norm == 0.0 {
        f64::INFINITY
    } else {
        residual_norm / v_norm
    };
    let v = spectrum.from_eigen(&v_eig);

    Ok(ApproxLinearDecomposition {
        absorbed,
        v,
        residual_norm,
        v_norm,
        ratio,
        constant: q.constant_term(),
        linear_eigen,
        spectrum,
    })
}

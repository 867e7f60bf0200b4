//! δ-approximate Gaussians: a Box–Muller transform evaluated on a half-integer
//! grid, so that a sample is a function of two `⌈log₂ N⌉`-bit indices.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::bits::BitReader;
use crate::error::{invalid, Result};

/// Smallest accepted precision: keeps `N = ⌊δ⁻³⌋ ≤ 2⁶³` inside a `u64`.
pub const MIN_DELTA: f64 = 1.0 / (1u64 << 21) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxGaussianSpec {
    pub delta: f64,
    /// Grid resolution `N = ⌊δ⁻³⌋`.
    pub resolution: u64,
    pub bits_per_uniform: u32,
    pub bits_total: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledPair {
    /// Exact Box–Muller value of `(u, v)`; standard normal.
    pub exact: f64,
    /// The grid-rounded sample.
    pub approx: f64,
    /// `u < 1/(2N)`: the region where the two may drift apart by more than δ.
    pub in_tail: bool,
}

/// `⌊δ⁻³⌋`, snapping to the nearest integer when rounding noise straddles it.
fn resolution_for(delta: f64) -> u64 {
    let x = 1.0 / (delta * delta * delta);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x {
        r as u64
    } else {
        x.floor() as u64
    }
}

fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

impl ApproxGaussianSpec {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(invalid(format!("approximate-Gaussian delta must lie in (0, 1/2), got {delta}")));
        }
        if delta < MIN_DELTA {
            return Err(invalid(format!(
                "approximate-Gaussian delta {delta:e} below the supported floor 2^-21"
            )));
        }
        Self::with_resolution_unchecked(delta, resolution_for(delta))
    }

    /// Builds a spec directly from the grid size `N ≥ 8`; `delta` is set to `N^{-1/3}`.
    pub fn with_resolution(resolution: u64) -> Result<Self> {
        Self::with_resolution_unchecked((resolution as f64).powf(-1.0 / 3.0), resolution)
    }

    fn with_resolution_unchecked(delta: f64, resolution: u64) -> Result<Self> {
        if resolution < 8 {
            return Err(invalid(format!("grid resolution must be at least 8, got {resolution}")));
        }
        if resolution > 1 << 63 {
            return Err(invalid("grid resolution exceeds 2^63"));
        }
        let bits_per_uniform = ceil_log2(resolution);
        Ok(Self {
            delta,
            resolution,
            bits_per_uniform,
            bits_total: 2 * bits_per_uniform,
        })
    }

    /// Largest possible `|Y|`, i.e. `sqrt(2·ln(2N))`.
    pub fn max_abs(&self) -> f64 {
        (-2.0 * (0.5 / self.resolution as f64).ln()).sqrt()
    }

    #[inline]
    fn grid_point(&self, i: u64) -> f64 {
        (i as f64 + 0.5) / self.resolution as f64
    }

    /// `sqrt(−2 ln z')·cos(2π θ')` with `z' = (j+½)/N`, `θ' = (k+½)/N`.
    pub fn sample(&self, j: u64, k: u64) -> Result<f64> {
        if j >= self.resolution || k >= self.resolution {
            return Err(invalid(format!(
                "grid indices ({j}, {k}) out of range for N = {}",
                self.resolution
            )));
        }
        Ok(self.sample_unchecked(j, k))
    }

    #[inline]
    pub(crate) fn sample_unchecked(&self, j: u64, k: u64) -> f64 {
        let radius = (-2.0 * self.grid_point(j).ln()).sqrt();
        radius * (TAU * self.grid_point(k)).cos()
    }

    fn nearest_index(&self, u: f64) -> u64 {
        let i = (u * self.resolution as f64 - 0.5).round();
        if i <= 0.0 {
            0
        } else {
            (i as u64).min(self.resolution - 1)
        }
    }

    /// Exact Box–Muller value of `(u, v)` alongside its grid rounding.
    pub fn coupled_pair(&self, u: f64, v: f64) -> Result<CoupledPair> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return Err(invalid(format!("coupling inputs must lie in (0, 1), got ({u}, {v})")));
        }
        let exact = (-2.0 * u.ln()).sqrt() * (TAU * v).cos();
        let approx = self.sample_unchecked(self.nearest_index(u), self.nearest_index(v));
        Ok(CoupledPair {
            exact,
            approx,
            in_tail: u < 0.5 / self.resolution as f64,
        })
    }

    /// Reads the `j` block then the `k` block, each `bits_per_uniform` bits
    /// big-endian, and reduces them mod `N`.
    ///
    /// Unless `N` is a power of two the reduction is biased: the lowest
    /// `2^bits − N` indices are twice as likely as the rest.
    pub fn consume_bits(&self, reader: &mut BitReader<'_>) -> Result<(u64, u64)> {
        let j = reader.read(self.bits_per_uniform)? % self.resolution;
        let k = reader.read(self.bits_per_uniform)? % self.resolution;
        Ok((j, k))
    }
}

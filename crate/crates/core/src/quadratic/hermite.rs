//! Orthonormal Hermite expansion of quadratics.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::Quadratic;
use crate::error::{invalid, Error, Result};

/// Basis element of the degree-≤2 Hermite expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HermiteIndex {
    Const,
    /// `h₁(x_i)`
    H1(usize),
    /// `h₂(x_i)`
    H2(usize),
    /// `h₁(x_i)·h₁(x_j)` with `i < j`
    H11(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteExpansion {
    pub dim: usize,
    pub coeffs: BTreeMap<HermiteIndex, f64>,
}

impl HermiteExpansion {
    pub fn get(&self, index: HermiteIndex) -> f64 {
        self.coeffs.get(&index).copied().unwrap_or(0.0)
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    /// Inverse of [`hermite_expand`].
    pub fn reconstruct(&self) -> Result<Quadratic> {
        let n = self.dim;
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        let mut c = 0.0;
        for (&idx, &coef) in &self.coeffs {
            match idx {
                HermiteIndex::Const => c += coef,
                HermiteIndex::H1(i) => b[i] += coef,
                HermiteIndex::H2(i) => {
                    // coef·(x² − 1)/√2
                    a[i * n + i] += coef / SQRT_2;
                    c -= coef / SQRT_2;
                }
                HermiteIndex::H11(i, j) => {
                    a[i * n + j] += coef / 2.0;
                    a[j * n + i] += coef / 2.0;
                }
            }
        }
        Quadratic::from_dense(n, a, b, c)
    }
}

/// Coefficients over `{1, h₁(x_i), h₂(x_i), h₁(x_i)h₁(x_j)}`; zero
/// coefficients are omitted.
pub fn hermite_expand(q: &Quadratic) -> HermiteExpansion {
    let n = q.dim();
    let mut coeffs = BTreeMap::new();
    let mut put = |k: HermiteIndex, v: f64| {
        if v != 0.0 {
            coeffs.insert(k, v);
        }
    };
    put(HermiteIndex::Const, q.mean());
    for i in 0..n {
        put(HermiteIndex::H1(i), q.linear_part()[i]);
        put(HermiteIndex::H2(i), SQRT_2 * q.a(i, i));
        for j in i + 1..n {
            put(HermiteIndex::H11(i, j), 2.0 * q.a(i, j));
        }
    }
    HermiteExpansion { dim: n, coeffs }
}

/// Normalized probabilists' Hermite polynomial of degree `k ≤ 4`.
#[inline]
pub fn hermite_1d(k: u32, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => (x * x - 1.0) / SQRT_2,
        3 => (x * x * x - 3.0 * x) / 6f64.sqrt(),
        4 => {
            let x2 = x * x;
            (x2 * x2 - 6.0 * x2 + 3.0) / 24f64.sqrt()
        }
        _ => panic!("hermite_1d supports degrees up to 4, got {k}"),
    }
}

/// Sparse multi-index: `(coordinate, degree)` pairs with distinct coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<(usize, u32)>);

pub const MAX_HERMITE_DEGREE: u32 = 4;

impl MultiIndex {
    pub fn new(mut entries: Vec<(usize, u32)>) -> Result<Self> {
        entries.retain(|&(_, d)| d > 0);
        entries.sort_unstable();
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("multi-index repeats a coordinate"));
        }
        let total: u32 = entries.iter().map(|&(_, d)| d).sum();
        if total > MAX_HERMITE_DEGREE {
            return Err(invalid(format!(
                "total Hermite degree {total} exceeds supported maximum {MAX_HERMITE_DEGREE}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn from_dense(degrees: &[u32]) -> Result<Self> {
        Self::new(degrees.iter().copied().enumerate().collect())
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&(_, d)| d).sum()
    }

    /// Every multi-index over `dim` coordinates with `1 ≤ total degree ≤ max_degree`.
    pub fn enumerate(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
        fn rec(dim: usize, start: usize, budget: u32, cur: &mut Vec<(usize, u32)>, out: &mut Vec<MultiIndex>) {
            for coord in start..dim {
                for d in 1..=budget {
                    cur.push((coord, d));
                    out.push(MultiIndex(cur.clone()));
                    rec(dim, coord + 1, budget - d, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(dim, 0, max_degree.min(MAX_HERMITE_DEGREE), &mut Vec::new(), &mut out);
        out
    }

    /// Product of single-variable Hermite values; no bounds checks.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(i, d)| hermite_1d(d, x[i])).product()
    }
}

/// `Π_i h_{a_i}(x_i)` for a multi-index of total degree ≤ 4.
pub fn hermite_value(index: &MultiIndex, x: &[f64]) -> Result<f64> {
    if let Some(&(i, _)) = index.0.iter().find(|&&(i, _)| i >= x.len()) {
        return Err(Error::DimensionMismatch {
            expected: i + 1,
            got: x.len(),
        });
    }
    Ok(index.eval_unchecked(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::random_quadratic;
    use crate::rng::CounterRng;

    #[test]
    fn expand_examples() {
        // x² = √2·h₂(x) + 1; check the identity pointwise first
        for x in [0.0, 1.0, 2.0] {
            assert!((x * x - (SQRT_2 * hermite_1d(2, x) + 1.0)).abs() < 1e-15);
        }
        let sq = Quadratic::diagonal(&[1.0, 0.0], vec![0.0; 2], 0.0).unwrap();
        let e = hermite_expand(&sq);
        assert_eq!(e.coeffs.len(), 2);
        assert_eq!(e.get(HermiteIndex::Const), 1.0);
        assert!((e.get(HermiteIndex::H2(0)) - SQRT_2).abs() < 1e-15);

        let x1x2 = Quadratic::from_upper_triangle(2, &[0.0, 0.5, 0.0], vec![0.0; 2], 0.0).unwrap();
        let e = hermite_expand(&x1x2);
        assert_eq!(e.coeffs.len(), 1);
        assert_eq!(e.get(HermiteIndex::H11(0, 1)), 1.0);

        assert!(hermite_expand(&Quadratic::zero(3)).coeffs.is_empty());
    }

    #[test]
    fn value_examples() {
        let h2 = MultiIndex::new(vec![(0, 2)]).unwrap();
        assert_eq!(hermite_value(&h2, &[1.0]).unwrap(), 0.0);
        assert!((hermite_value(&h2, &[2.0]).unwrap() - 3.0 / SQRT_2).abs() < 1e-15);
        let h1 = MultiIndex::new(vec![(0, 1)]).unwrap();
        assert_eq!(hermite_value(&h1, &[2.5]).unwrap(), 2.5);
    }

    #[test]
    fn degree_above_four_rejected() {
        assert!(matches!(MultiIndex::new(vec![(0, 5)]), Err(Error::InvalidArgument(_))));
        assert!(matches!(MultiIndex::new(vec![(0, 3), (1, 2)]), Err(Error::InvalidArgument(_))));
        let idx = MultiIndex::new(vec![(3, 1)]).unwrap();
        assert!(hermite_value(&idx, &[0.0; 2]).is_err());
    }

    #[test]
    fn one_dimensional_orthonormality_by_quadrature() {
        let h = 1e-3;
        for a in 0..=4u32 {
            for b in 0..=4u32 {
                let inner: f64 = (0..30_000)
                    .map(|k| {
                        let x = -15.0 + (k as f64 + 0.5) * h;
                        hermite_1d(a, x) * hermite_1d(b, x) * (-0.5 * x * x).exp()
                    })
                    .sum::<f64>()
                    * h
                    / (2.0 * std::f64::consts::PI).sqrt();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((inner - want).abs() < 1e-9, "<h{a}, h{b}> = {inner}");
            }
        }
    }

    #[test]
    fn enumerate_counts() {
        // monomials of degree 1..=4 in 16 variables: C(20,4) − 1
        assert_eq!(MultiIndex::enumerate(16, 4).len(), 4844);
        assert_eq!(MultiIndex::enumerate(2, 2).len(), 5);
    }

    #[test]
    fn parseval_and_round_trip() {
        let mut rng = CounterRng::new(99);
        for t in 0..100 {
            let n = 1 + t % 32;
            let q = random_quadratic(&mut rng, n);
            let e = hermite_expand(&q);
            let norm2 = q.l2_norm().powi(2);
            assert!((norm2 - e.sum_of_squares()).abs() <= 1e-9 * norm2);
            let back = e.reconstruct().unwrap();
            for (x, y) in back.matrix().iter().zip(q.matrix()) {
                assert!((x - y).abs() <= 1e-12);
            }
            for (x, y) in back.linear_part().iter().zip(q.linear_part()) {
                assert!((x - y).abs() <= 1e-12);
            }
            assert!((back.constant_term() - q.constant_term()).abs() <= 1e-12 * (1.0 + q.mean().abs()));
        }
    }
}

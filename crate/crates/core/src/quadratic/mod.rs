//! Degree-2 polynomials over `R^n` and their Gaussian analysis.
//!
//! A [`Quadratic`] is `x ↦ xᵀAx + b·x + c` with `A` symmetric. Norms are taken
//! under the standard Gaussian measure, and the Hermite convention is the
//! orthonormal probabilists' one (`h₂(x) = (x² − 1)/√2`).

mod decompose;
mod hermite;
mod spectrum;

pub use decompose::{decompose_approx_linear, decompose_with_spectrum, ApproxLinearDecomposition, DEFAULT_KAPPA};
pub use hermite::{
    hermite_1d, hermite_expand, hermite_value, HermiteExpansion, HermiteIndex, MultiIndex, MAX_HERMITE_DEGREE,
};
pub use spectrum::{eigendecompose, Spectrum, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadraticRepr", into = "QuadraticRepr")]
pub struct Quadratic {
    dim: usize,
    /// Full symmetric matrix, row-major; `a[i*dim + j] == a[j*dim + i]`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

/// On-disk form: only the upper triangle (diagonal included) is stored.
#[derive(Serialize, Deserialize)]
struct QuadraticRepr {
    dim: usize,
    #[serde(rename = "A_upper_triangle")]
    a_upper_triangle: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl TryFrom<QuadraticRepr> for Quadratic {
    type Error = Error;

    fn try_from(r: QuadraticRepr) -> Result<Self> {
        Quadratic::from_upper_triangle(r.dim, &r.a_upper_triangle, r.b, r.c)
    }
}

impl From<Quadratic> for QuadraticRepr {
    fn from(q: Quadratic) -> Self {
        QuadraticRepr {
            dim: q.dim,
            a_upper_triangle: q.upper_triangle(),
            b: q.b,
            c: q.c,
        }
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what} contains non-finite entries")))
    }
}

impl Quadratic {
    /// Builds from a full row-major matrix, which must be exactly symmetric.
    pub fn from_dense(dim: usize, a: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if a.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: a.len(),
            });
        }
        if b.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b.len(),
            });
        }
        check_finite(&a, "A")?;
        check_finite(&b, "b")?;
        check_finite(&[c], "c")?;
        for i in 0..dim {
            for j in i + 1..dim {
                if a[i * dim + j] != a[j * dim + i] {
                    return Err(invalid(format!("A is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { dim, a, b, c })
    }

    /// Builds from the row-major upper triangle (diagonal included).
    pub fn from_upper_triangle(dim: usize, upper: &[f64], b: Vec<f64>, c: f64) -> Result<Self> {
        let expected = dim * (dim + 1) / 2;
        if upper.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: upper.len(),
            });
        }
        let mut a = vec![0.0; dim * dim];
        let mut it = upper.iter();
        for i in 0..dim {
            for j in i..dim {
                let v = *it.next().expect("length checked");
                a[i * dim + j] = v;
                a[j * dim + i] = v;
            }
        }
        Self::from_dense(dim, a, b, c)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            a: vec![0.0; dim * dim],
            b: vec![0.0; dim],
            c: 0.0,
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            c,
            ..Self::zero(dim)
        }
    }

    pub fn linear(b: Vec<f64>, c: f64) -> Result<Self> {
        let dim = b.len();
        Self::from_dense(dim, vec![0.0; dim * dim], b, c)
    }

    pub fn diagonal(diag: &[f64], b: Vec<f64>, c: f64) -> Result<Self> {
        let dim = diag.len();
        let mut a = vec![0.0; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            a[i * dim + i] = d;
        }
        Self::from_dense(dim, a, b, c)
    }

    /// Builds `Σ w_k u_k u_kᵀ` style matrices from a closure over index pairs;
    /// only `i ≤ j` is queried.
    pub fn from_fn(
        dim: usize,
        mut entry: impl FnMut(usize, usize) -> f64,
        b: Vec<f64>,
        c: f64,
    ) -> Result<Self> {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = entry(i, j);
                a[i * dim + j] = v;
                a[j * dim + i] = v;
            }
        }
        Self::from_dense(dim, a, b, c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dim + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn linear_part(&self) -> &[f64] {
        &self.b
    }

    pub fn constant_term(&self) -> f64 {
        self.c
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.a[i * n + i..(i + 1) * n]);
        }
        out
    }

    pub fn has_quadratic_part(&self) -> bool {
        self.a.iter().any(|&v| v != 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..n).all(|j| i == j || self.a[i * n + j] == 0.0))
    }

    /// `xᵀAx + b·x + c`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Same as [`evaluate`](Self::evaluate) without the length check.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = self.c;
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            let mut off = 0.0;
            for j in i + 1..n {
                off += row[j] * x[j];
            }
            acc += x[i] * (row[i] * x[i] + 2.0 * off + self.b[i]);
        }
        acc
    }

    /// Gaussian L² norm `sqrt(E[q(X)²])`.
    pub fn l2_norm(&self) -> f64 {
        let n = self.dim;
        let trace: f64 = (0..n).map(|i| self.a[i * n + i]).sum();
        let frob2: f64 = self.a.iter().map(|v| v * v).sum();
        let b2: f64 = self.b.iter().map(|v| v * v).sum();
        ((trace + self.c).powi(2) + 2.0 * frob2 + b2).sqrt()
    }

    /// Gaussian mean `E[q(X)] = tr A + c`.
    pub fn mean(&self) -> f64 {
        (0..self.dim).map(|i| self.a[i * self.dim + i]).sum::<f64>() + self.c
    }

    /// The random restriction `x ↦ q(√(1−δ²)·X + δ·x)`.
    pub fn restrict(&self, center: &[f64], delta: f64) -> Result<Quadratic> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("restriction delta must lie in (0, 1), got {delta}")));
        }
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: center.len(),
            });
        }
        let n = self.dim;
        let keep = (1.0 - delta * delta).sqrt();
        let scaled: Vec<f64> = center.iter().map(|v| keep * v).collect();
        let c = self.eval_unchecked(&scaled);
        let a: Vec<f64> = self.a.iter().map(|v| delta * delta * v).collect();
        let b = (0..n)
            .map(|i| {
                let ax: f64 = (0..n).map(|j| self.a[i * n + j] * center[j]).sum();
                2.0 * delta * keep * ax + delta * self.b[i]
            })
            .collect();
        Ok(Quadratic { dim: n, a, b, c })
    }

    /// Expresses the polynomial in coordinates `y = Uᵀx` for an orthonormal
    /// `U` given row-major with eigenvectors as columns.
    pub fn in_basis(&self, basis: &[f64]) -> Result<Quadratic> {
        let n = self.dim;
        if basis.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: basis.len(),
            });
        }
        // AU, then Uᵀ(AU)
        let mut au = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    au[i * n + j] += aik * basis[k * n + j];
                }
            }
        }
        let a_rot = |p: usize, q: usize| (0..n).map(|i| basis[i * n + p] * au[i * n + q]).sum::<f64>();
        let b: Vec<f64> = (0..n)
            .map(|p| (0..n).map(|i| basis[i * n + p] * self.b[i]).sum())
            .collect();
        Quadratic::from_fn(n, a_rot, b, self.c)
    }

    pub fn scaled(&self, factor: f64) -> Quadratic {
        Quadratic {
            dim: self.dim,
            a: self.a.iter().map(|v| v * factor).collect(),
            b: self.b.iter().map(|v| v * factor).collect(),
            c: self.c * factor,
        }
    }

    pub fn negated(&self) -> Quadratic {
        self.scaled(-1.0)
    }

    pub fn add(&self, other: &Quadratic) -> Result<Quadratic> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Quadratic {
            dim: self.dim,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect(),
            c: self.c + other.c,
        })
    }

    pub fn sub(&self, other: &Quadratic) -> Result<Quadratic> {
        self.add(&other.negated())
    }

    /// Every upper-triangle entry, linear coefficient and the constant drawn
    /// i.i.d. standard normal, in that order.
    pub fn random(dim: usize, rng: &mut crate::rng::CounterRng) -> Quadratic {
        let upper: Vec<f64> = (0..dim * (dim + 1) / 2).map(|_| rng.gaussian()).collect();
        let b = (0..dim).map(|_| rng.gaussian()).collect();
        let c = rng.gaussian();
        Quadratic::from_upper_triangle(dim, &upper, b, c).expect("finite entries")
    }
}


#[cfg(test)]
pub(crate) use tests::random_quadratic;

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn quadratic(max_dim: usize) -> impl Strategy<Value = Quadratic> {
        (1..=max_dim).prop_flat_map(|n| {
            (
                proptest::collection::vec(-3.0..3.0f64, n * (n + 1) / 2),
                proptest::collection::vec(-3.0..3.0f64, n),
                -3.0..3.0f64,
            )
                .prop_map(move |(u, b, c)| Quadratic::from_upper_triangle(n, &u, b, c).unwrap())
        })
    }

    proptest! {
        #[test]
        fn restriction_matches_substitution(
            q in quadratic(6),
            delta in 0.01..0.99f64,
            seed in any::<u64>(),
        ) {
            let n = q.dim();
            let mut rng = crate::rng::CounterRng::new(seed);
            let mut center = vec![0.0; n];
            rng.fill_gaussian(&mut center);
            let r = q.restrict(&center, delta).unwrap();
            let keep = (1.0 - delta * delta).sqrt();
            for _ in 0..10 {
                let mut x = vec![0.0; n];
                rng.fill_gaussian(&mut x);
                let point: Vec<f64> = (0..n).map(|i| keep * center[i] + delta * x[i]).collect();
                let direct = q.evaluate(&point).unwrap();
                let via = r.evaluate(&x).unwrap();
                let scale = direct.abs().max(q.l2_norm()).max(1.0);
                prop_assert!((direct - via).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn json_round_trip(q in quadratic(5)) {
            let s = serde_json::to_string(&q).unwrap();
            let back: Quadratic = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, q);
        }
    }
}

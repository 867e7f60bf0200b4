//! Named PTF test cases with their Gaussian oracle values.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::oracle::{oracle, OracleMethod};
use crate::error::{invalid, Result};
use crate::quadratic::Quadratic;
use crate::rng::CounterRng;

/// Seed of the random dense cases in [`standard_suite`]; case `i` uses
/// `CounterRng::new(RANDOM_CASE_SEED + i)`.
pub const RANDOM_CASE_SEED: u64 = 0x5EED_0000;

/// Scale of the quadratic part in the `near_linear` case.
pub const NEAR_LINEAR_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseOracle {
    /// `E[sgn(p(X))]` known to ~1e-6, with the method that produced it.
    ClosedForm { value: f64, method: OracleMethod },
    /// No closed form: estimate under true Gaussian input with this many trials.
    MonteCarlo { trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtfCase {
    pub name: String,
    pub poly: Quadratic,
    pub oracle: CaseOracle,
    pub boundary_sensitive: bool,
}

impl PtfCase {
    /// A case whose oracle is computed by [`oracle`](super::oracle::oracle).
    pub fn closed_form(name: impl Into<String>, poly: Quadratic) -> Result<Self> {
        let o = oracle(&poly)?;
        Ok(Self {
            name: name.into(),
            poly,
            oracle: CaseOracle::ClosedForm {
                value: o.value,
                method: o.method,
            },
            boundary_sensitive: o.boundary_sensitive,
        })
    }

    pub fn monte_carlo(name: impl Into<String>, poly: Quadratic, trials: u64) -> Self {
        Self {
            name: name.into(),
            poly,
            oracle: CaseOracle::MonteCarlo { trials },
            boundary_sensitive: false,
        }
    }

    pub fn closed_form_value(&self) -> Option<f64> {
        match self.oracle {
            CaseOracle::ClosedForm { value, .. } => Some(value),
            CaseOracle::MonteCarlo { .. } => None,
        }
    }

    /// The case for `−p`; its oracle is the negation (up to the measure-zero
    /// set `p = 0`).
    pub fn negated(&self) -> Result<Self> {
        Self::closed_form(format!("neg_{}", self.name), self.poly.negated())
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// The ten standard cases over `R^n`, `n ≥ 4`:
///
/// | name | polynomial |
/// |---|---|
/// | `linear` | `x₁` |
/// | `linear_shift1` | `x₁ − 1` |
/// | `rank1` | `x₁x₂ + 1/4` |
/// | `ellipsoid_n` | `Σ xᵢ² − n` |
/// | `saddle` | `Σ_{i<n/2} xᵢ² − Σ_{i≥n/2} xᵢ² + 1/2` |
/// | `near_linear` | `Σxᵢ/√n + 0.1·Σ(xᵢ² − 1)/√(2n) + 0.1` |
/// | `random_dense_{0,1,2}` | [`Quadratic::random`] with fixed seeds |
/// | `constant` | `1` |
pub fn standard_suite(n: usize) -> Result<Vec<PtfCase>> {
    if n < 4 {
        return Err(invalid(format!("the standard suite needs n ≥ 4, got {n}")));
    }
    let nf = n as f64;
    let mut cases = vec![
        PtfCase::closed_form("linear", Quadratic::linear(unit(n, 0), 0.0)?)?,
        PtfCase::closed_form("linear_shift1", Quadratic::linear(unit(n, 0), -1.0)?)?,
        PtfCase::closed_form(
            "rank1",
            Quadratic::from_fn(n, |i, j| if (i, j) == (0, 1) { 0.5 } else { 0.0 }, vec![0.0; n], 0.25)?,
        )?,
        PtfCase::closed_form("ellipsoid_n", Quadratic::diagonal(&vec![1.0; n], vec![0.0; n], -nf)?)?,
        PtfCase::closed_form(
            "saddle",
            Quadratic::diagonal(
                &(0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect::<Vec<_>>(),
                vec![0.0; n],
                0.5,
            )?,
        )?,
        PtfCase::closed_form(
            "near_linear",
            Quadratic::diagonal(
                &vec![NEAR_LINEAR_SCALE / (2.0 * nf).sqrt(); n],
                vec![1.0 / nf.sqrt(); n],
                NEAR_LINEAR_SCALE - NEAR_LINEAR_SCALE * nf / (2.0 * nf).sqrt(),
            )?,
        )?,
    ];
    for i in 0..3u64 {
        let poly = Quadratic::random(n, &mut CounterRng::new(RANDOM_CASE_SEED + i));
        cases.push(PtfCase::closed_form(format!("random_dense_{i}"), poly)?);
    }
    cases.push(PtfCase::closed_form("constant", Quadratic::constant(n, 1.0))?);
    Ok(cases)
}

/// Edge cases whose sign pattern hugs the zero set of a semidefinite form.
pub fn boundary_suite(n: usize) -> Result<Vec<PtfCase>> {
    if n < 2 {
        return Err(invalid("the boundary suite needs n ≥ 2"));
    }
    Ok(vec![
        PtfCase::closed_form("square_x1", Quadratic::diagonal(&unit(n, 0), vec![0.0; n], 0.0)?)?,
        PtfCase::closed_form(
            "neg_square_sum",
            Quadratic::diagonal(&[-1.0, -1.0].iter().copied().chain(std::iter::repeat(0.0)).take(n).collect::<Vec<_>>(), vec![0.0; n], 0.0)?,
        )?,
    ])
}

/// Git-style content hash of a suite: SHA-256 over `"blob <len>\0"` followed
/// by the suite's compact JSON.
pub fn suite_hash(cases: &[PtfCase]) -> String {
    let body = serde_json::to_vec(cases).expect("suite serializes");
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(&body);
    hex::encode(h.finalize())
}

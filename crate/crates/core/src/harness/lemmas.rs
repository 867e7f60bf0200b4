//! Empirical checks of the supporting lemmas: one-step replacement,
//! approximate linearity after random restriction, indicator × polynomial
//! fooling, anticoncentration and concentration.

use serde::{Deserialize, Serialize};

use super::report::{compare_with_oracle, DiscrepancyReport, Tolerance, MIN_TRIALS};
use super::sampler::{run_trials, GaussianSampler, GeneratorSampler, Sampler};
use super::stats::{binomial_stderr, Moments};
use super::suite::PtfCase;
use crate::error::{invalid, Error, Result};
use crate::generator::GeneratorConfig;
use crate::quadratic::{decompose_with_spectrum, eigendecompose, MultiIndex, Quadratic};
use crate::rng::{derive_key, CounterRng};

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(invalid(format!("at least {MIN_TRIALS} trials are required, got {trials}")));
    }
    Ok(())
}

/// `E[f(X)]` against `Ê[f(√(1−δ³)X + δ^{3/2}Y₁)]` for every case, with fresh
/// Gaussian `X` per trial.
pub fn test_one_step(
    cases: &[PtfCase],
    config: &GeneratorConfig,
    trials: u64,
    seed: u64,
) -> Result<Vec<DiscrepancyReport>> {
    compare_with_oracle(cases, &GeneratorSampler::hybrid(config, seed, 1), trials, seed, Tolerance::STANDARD)
}

/// Failure fraction of the approximate-linearity decomposition for one `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub r: usize,
    pub delta: f64,
    pub kappa: f64,
    pub trials: u64,
    pub failures: u64,
    pub fraction: f64,
    pub stderr: f64,
    /// A restriction fails when `‖q‖₂ / ‖v‖₂` exceeds this (`10·δ`).
    pub ratio_threshold: f64,
    /// Largest ratio seen over all restrictions.
    pub max_ratio: f64,
}

impl DecompositionRow {
    pub const CSV_HEADER: &'static str = "r,delta,kappa,trials,failures,fraction,stderr,ratio_threshold,max_ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.r,
            self.delta,
            self.kappa,
            self.trials,
            self.failures,
            self.fraction,
            self.stderr,
            self.ratio_threshold,
            self.max_ratio
        )
    }
}

/// Restricts `p` at `trials` Gaussian centres `X` and decomposes each
/// restriction `p(√(1−δ²)X + δx)` for every `r` in `rs`, counting how often the
/// residual-to-linear ratio exceeds `10δ`.
pub fn test_decomposition(
    p: &Quadratic,
    delta: f64,
    rs: &[usize],
    kappa: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<DecompositionRow>> {
    if !p.has_quadratic_part() {
        return Err(invalid("polynomial has no quadratic part; it is vacuously linear"));
    }
    if rs.is_empty() {
        return Err(invalid("need at least one r"));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    // the restriction's quadratic part is δ²A: same eigenvectors, scaled values
    let restricted_spectrum = eigendecompose(p)?.scaled(delta * delta);
    let threshold = 10.0 * delta;
    let sampler = GaussianSampler::new(p.dim(), seed);
    // per r: (failure count, largest ratio)
    type Tally = Result<Vec<(u64, f64)>>;
    let tallies = run_trials(
        &sampler,
        trials,
        || -> Tally { Ok(vec![(0, 0.0); rs.len()]) },
        |acc: &mut Tally, x| {
            let Ok(tally) = acc else { return };
            let outcome = p.restrict(x, delta).and_then(|q| {
                rs.iter()
                    .map(|&r| decompose_with_spectrum(&q, restricted_spectrum.clone(), r, delta, kappa).map(|d| d.ratio))
                    .collect::<Result<Vec<f64>>>()
            });
            match outcome {
                Ok(ratios) => tally.iter_mut().zip(ratios).for_each(|((count, max), ratio)| {
                    *count += (ratio > threshold) as u64;
                    *max = max.max(ratio);
                }),
                Err(e) => *acc = Err(e),
            }
        },
        |total, part| match (total.as_mut(), part) {
            (Ok(t), Ok(p)) => t.iter_mut().zip(p).for_each(|(a, b)| {
                a.0 += b.0;
                a.1 = a.1.max(b.1);
            }),
            (Ok(_), Err(e)) => *total = Err(e),
            (Err(_), _) => {}
        },
    )??;
    Ok(rs
        .iter()
        .zip(tallies)
        .map(|(&r, (failures, max_ratio))| {
            let fraction = failures as f64 / trials as f64;
            DecompositionRow {
                r,
                delta,
                kappa,
                trials,
                failures,
                fraction,
                stderr: binomial_stderr(fraction, trials),
                ratio_threshold: threshold,
                max_ratio,
            }
        })
        .collect())
}

/// Whether failure fractions are nonincreasing along `rows` (ordered by
/// increasing `r`), allowing two combined binomial standard errors of slack.
pub fn failure_trend_nonincreasing(rows: &[DecompositionRow]) -> bool {
    rows.windows(2).all(|w| {
        let slack = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].fraction <= w[0].fraction + slack
    })
}

/// A real combination of normalized Hermite products, total degree ≤ 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitePoly {
    pub terms: Vec<(f64, MultiIndex)>,
}

impl HermitePoly {
    pub fn new(terms: Vec<(f64, MultiIndex)>) -> Self {
        Self { terms }
    }

    pub fn single(index: MultiIndex) -> Self {
        Self::new(vec![(1.0, index)])
    }

    pub fn constant() -> Self {
        Self::single(MultiIndex::new(vec![]).expect("empty index is valid"))
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, m)| m.total_degree()).max().unwrap_or(0)
    }

    /// Largest coordinate touched plus one.
    pub fn min_dim(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(_, m)| m.entries().iter().map(|&(i, _)| i + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, m)| c * m.eval_unchecked(x)).sum()
    }
}

/// Closed interval with possibly infinite ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ALL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid(format!("empty or invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Coordinates a quadratic depends on.
pub fn support(p: &Quadratic) -> Vec<usize> {
    let n = p.dim();
    (0..n)
        .filter(|&i| p.linear_part()[i] != 0.0 || (0..n).any(|j| p.a(i, j) != 0.0))
        .collect()
}

/// One `g·q` fooling comparison, `g = 1{s ∈ I}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoolingReport {
    pub name: String,
    pub gaussian_mean: f64,
    pub gaussian_stderr: f64,
    pub pseudo_mean: f64,
    pub pseudo_stderr: f64,
    pub gap: f64,
    pub stderr: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl FoolingReport {
    pub const CSV_HEADER: &'static str =
        "name,gaussian_mean,gaussian_stderr,pseudo_mean,pseudo_stderr,gap,stderr,tolerance,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.name,
            self.gaussian_mean,
            self.gaussian_stderr,
            self.pseudo_mean,
            self.pseudo_stderr,
            self.gap,
            self.stderr,
            self.tolerance,
            self.pass
        )
    }
}

/// A constructed `(s, I, q)` triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoolingCase {
    pub name: String,
    pub s: Quadratic,
    pub interval: Interval,
    pub q: HermitePoly,
}

/// `|Ê[g(X)q(X)] − Ê[g(Y)q(Y)]|` with `g = 1{s ∈ I}`, `X` Gaussian and `Y`
/// from `pseudo`; `s` must depend on at most `r` coordinates.
pub fn test_indicator_poly_fooling<S: Sampler>(
    case: &FoolingCase,
    r: usize,
    pseudo: &S,
    trials: u64,
    seed: u64,
    tolerance: Tolerance,
) -> Result<FoolingReport> {
    check_trials(trials)?;
    let n = pseudo.dim();
    if case.s.dim() != n || case.q.min_dim() > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: case.s.dim().max(case.q.min_dim()),
        });
    }
    let touched = support(&case.s).len();
    if touched > r {
        return Err(invalid(format!("s depends on {touched} coordinates, more than r = {r}")));
    }
    let stat = |x: &[f64]| {
        if case.interval.contains(case.s.eval_unchecked(x)) {
            case.q.eval_unchecked(x)
        } else {
            0.0
        }
    };
    let step = |m: &mut Moments, x: &[f64]| m.push(stat(x));
    let merge = |t: &mut Moments, p: Moments| t.merge(&p);
    let gauss = run_trials(&GaussianSampler::new(n, derive_key(seed, 2)), trials, Moments::default, step, merge)?;
    let pseudo_m = run_trials(pseudo, trials, Moments::default, step, merge)?;
    let stderr = (gauss.stderr().powi(2) + pseudo_m.stderr().powi(2)).sqrt();
    let gap = (gauss.mean() - pseudo_m.mean()).abs();
    let bound = tolerance.bound(stderr);
    Ok(FoolingReport {
        name: case.name.clone(),
        gaussian_mean: gauss.mean(),
        gaussian_stderr: gauss.stderr(),
        pseudo_mean: pseudo_m.mean(),
        pseudo_stderr: pseudo_m.stderr(),
        gap,
        stderr,
        tolerance: bound,
        pass: gap <= bound,
    })
}

/// Five `(s, I, q)` triples over `R^n` (`n ≥ 3`) with `s` on at most two
/// coordinates and `deg q ≤ 4`.
pub fn fooling_cases(n: usize) -> Result<Vec<FoolingCase>> {
    if n < 3 {
        return Err(invalid("the fooling cases need n ≥ 3"));
    }
    let e = |i: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    };
    let mi = |entries: &[(usize, u32)]| MultiIndex::new(entries.to_vec());
    Ok(vec![
        FoolingCase {
            name: "trivial_indicator_h2".into(),
            s: Quadratic::linear(e(0), 0.0)?,
            interval: Interval::ALL,
            q: HermitePoly::single(mi(&[(0, 2)])?),
        },
        FoolingCase {
            name: "halfspace_x1_times_x2".into(),
            s: Quadratic::linear(e(0), 0.0)?,
            interval: Interval::new(0.0, f64::INFINITY)?,
            q: HermitePoly::single(mi(&[(1, 1)])?),
        },
        FoolingCase {
            name: "parabola_band_h2x3".into(),
            s: Quadratic::from_fn(n, |i, j| if (i, j) == (0, 0) { 1.0 } else { 0.0 }, e(1), 0.0)?,
            interval: Interval::new(-1.0, 1.0)?,
            q: HermitePoly::single(mi(&[(2, 2)])?),
        },
        FoolingCase {
            name: "product_sign_x1x2".into(),
            s: Quadratic::from_fn(n, |i, j| if (i, j) == (0, 1) { 0.5 } else { 0.0 }, vec![0.0; n], 0.0)?,
            interval: Interval::new(0.0, f64::INFINITY)?,
            q: HermitePoly::single(mi(&[(0, 1), (1, 1)])?),
        },
        FoolingCase {
            name: "saddle_band_degree4".into(),
            s: Quadratic::from_fn(
                n,
                |i, j| match (i, j) {
                    (0, 0) => 1.0,
                    (1, 1) => -1.0,
                    _ => 0.0,
                },
                vec![0.0; n],
                0.0,
            )?,
            interval: Interval::new(-0.5, 0.5)?,
            q: HermitePoly::new(vec![(1.0, mi(&[(0, 4)])?), (0.5, mi(&[(0, 2), (1, 2)])?), (0.25, MultiIndex::new(vec![])?)]),
        },
    ])
}

/// Empirical probability against an analytic bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    /// `ε` for anticoncentration, `N` for concentration.
    pub param: f64,
    pub count: u64,
    pub trials: u64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundRow {
    pub const CSV_HEADER: &'static str = "param,count,trials,empirical,stderr,bound,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.param, self.count, self.trials, self.empirical, self.stderr, self.bound, self.pass
        )
    }

    fn new(param: f64, count: u64, trials: u64, bound: f64) -> Self {
        let empirical = count as f64 / trials as f64;
        Self {
            param,
            count,
            trials,
            empirical,
            stderr: binomial_stderr(empirical, trials),
            bound,
            pass: empirical <= bound,
        }
    }
}

/// `3√ε`: the degree-2 anticoncentration bound with its constant pinned.
pub fn anticoncentration_bound(eps: f64) -> f64 {
    3.0 * eps.sqrt()
}

/// `4·2^{−N/2}`: the degree-2 concentration bound with its constant pinned.
pub fn concentration_bound(n: f64) -> f64 {
    4.0 * 2f64.powf(-n / 2.0)
}

/// Both bound checks from one pass over Gaussian samples: `P(|p| ≤ ε‖p‖₂)`
/// for each `ε` and `P(|p| > N‖p‖₂)` for each `N`.
pub fn test_bounds(
    p: &Quadratic,
    eps_list: &[f64],
    n_list: &[f64],
    trials: u64,
    seed: u64,
) -> Result<(Vec<BoundRow>, Vec<BoundRow>)> {
    check_trials(trials)?;
    let norm = p.l2_norm();
    if !(norm > 0.0) {
        return Err(invalid("polynomial has zero L2 norm"));
    }
    let small: Vec<f64> = eps_list.iter().map(|e| e * norm).collect();
    let large: Vec<f64> = n_list.iter().map(|n| n * norm).collect();
    let k = small.len();
    let counts = run_trials(
        &GaussianSampler::new(p.dim(), seed),
        trials,
        || vec![0u64; k + large.len()],
        |acc, x| {
            let v = p.eval_unchecked(x).abs();
            for (c, &t) in acc[..k].iter_mut().zip(&small) {
                *c += (v <= t) as u64;
            }
            for (c, &t) in acc[k..].iter_mut().zip(&large) {
                *c += (v > t) as u64;
            }
        },
        |t, p| t.iter_mut().zip(p).for_each(|(a, b)| *a += b),
    )?;
    let anti = eps_list
        .iter()
        .zip(&counts[..k])
        .map(|(&e, &c)| BoundRow::new(e, c, trials, anticoncentration_bound(e)))
        .collect();
    let conc = n_list
        .iter()
        .zip(&counts[k..])
        .map(|(&n, &c)| BoundRow::new(n, c, trials, concentration_bound(n)))
        .collect();
    Ok((anti, conc))
}

/// Empirical `P(|p(X)| ≤ ε‖p‖₂)` against `3√ε` for each `ε`.
pub fn test_anticoncentration(p: &Quadratic, eps_list: &[f64], trials: u64, seed: u64) -> Result<Vec<BoundRow>> {
    Ok(test_bounds(p, eps_list, &[], trials, seed)?.0)
}

/// Empirical `P(|p(X)| > N‖p‖₂)` against `4·2^{−N/2}` for each `N`.
pub fn test_concentration(p: &Quadratic, n_list: &[f64], trials: u64, seed: u64) -> Result<Vec<BoundRow>> {
    Ok(test_bounds(p, &[], n_list, trials, seed)?.1)
}

/// `count` random dense quadratics over `R^n` for the bound checks.
pub fn random_quadratics(n: usize, count: usize, seed: u64) -> Vec<Quadratic> {
    (0..count as u64)
        .map(|i| Quadratic::random(n, &mut CounterRng::new(derive_key(seed, i))))
        .collect()
}

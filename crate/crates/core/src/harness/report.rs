//! Sign expectations under a sampler and generator-vs-oracle discrepancy reports.

use serde::{Deserialize, Serialize};

use super::sampler::{run_trials, GaussianSampler, GeneratorSampler, Sampler};
use super::stats::SignEstimate;
use super::suite::{CaseOracle, PtfCase};
use crate::error::{invalid, Result};
use crate::generator::GeneratorConfig;
use crate::quadratic::Quadratic;
use crate::rng::derive_key;

/// Smallest trial count the estimators accept.
pub const MIN_TRIALS: u64 = 1_000;

/// Acceptance tolerance `systematic + stderr_multiplier · stderr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub systematic: f64,
    pub stderr_multiplier: f64,
}

impl Tolerance {
    /// The pinned acceptance recipe `0.02 + 3·stderr`.
    pub const STANDARD: Tolerance = Tolerance {
        systematic: 0.02,
        stderr_multiplier: 3.0,
    };

    pub fn bound(&self, stderr: f64) -> f64 {
        self.systematic + self.stderr_multiplier * stderr
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(invalid(format!("at least {MIN_TRIALS} trials are required, got {trials}")));
    }
    Ok(())
}

/// `E[sgn(p(S))]` for every `p` in `polys`, all evaluated on the same samples.
pub fn sign_expectations<S: Sampler>(polys: &[&Quadratic], sampler: &S, trials: u64) -> Result<Vec<SignEstimate>> {
    check_trials(trials)?;
    if let Some(p) = polys.iter().find(|p| p.dim() != sampler.dim()) {
        return Err(crate::Error::DimensionMismatch {
            expected: sampler.dim(),
            got: p.dim(),
        });
    }
    let counts = run_trials(
        sampler,
        trials,
        || vec![0u64; polys.len()],
        |acc, x| {
            for (count, p) in acc.iter_mut().zip(polys) {
                *count += (p.eval_unchecked(x) >= 0.0) as u64;
            }
        },
        |total, part| total.iter_mut().zip(part).for_each(|(t, p)| *t += p),
    )?;
    Ok(counts.into_iter().map(|c| SignEstimate::from_counts(c, trials)).collect())
}

/// Monte-Carlo `E[sgn(p(S))]` with its standard error.
pub fn mc_expectation<S: Sampler>(poly: &Quadratic, sampler: &S, trials: u64) -> Result<SignEstimate> {
    Ok(sign_expectations(&[poly], sampler, trials)?[0])
}

/// One row of a discrepancy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub case: String,
    /// `closed_form` or `monte_carlo`.
    pub oracle_kind: String,
    /// `E[f(X)]`: the closed form, or a Gaussian Monte-Carlo estimate.
    pub oracle: f64,
    /// Zero for closed forms.
    pub oracle_stderr: f64,
    /// Independent Gaussian Monte-Carlo estimate, as a check on the oracle.
    pub gaussian_estimate: Option<f64>,
    pub gaussian_stderr: Option<f64>,
    /// `Ê[f(Y)]` for the sampler under test.
    pub estimate: f64,
    /// Combined standard error of `estimate − oracle`.
    pub stderr: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub boundary_sensitive: bool,
    pub pass: bool,
}

impl DiscrepancyReport {
    pub const CSV_HEADER: &'static str =
        "case,oracle_kind,oracle,oracle_stderr,gaussian_estimate,gaussian_stderr,estimate,stderr,gap,tolerance,boundary_sensitive,pass";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.case,
            self.oracle_kind,
            self.oracle,
            self.oracle_stderr,
            opt(self.gaussian_estimate),
            opt(self.gaussian_stderr),
            self.estimate,
            self.stderr,
            self.gap,
            self.tolerance,
            self.boundary_sensitive,
            self.pass
        )
    }
}

/// Compares `sampler`'s sign expectations with each case's oracle.
///
/// Closed-form cases are also estimated under true Gaussian input (reported,
/// not used in the verdict); Monte-Carlo cases use that estimate as the
/// oracle. Gaussian draws come from `derive_key(seed, 1)` so they never share
/// bits with a sampler seeded by `seed`.
pub fn compare_with_oracle<S: Sampler>(
    cases: &[PtfCase],
    sampler: &S,
    trials: u64,
    seed: u64,
    tolerance: Tolerance,
) -> Result<Vec<DiscrepancyReport>> {
    if cases.is_empty() {
        return Err(invalid("suite must not be empty"));
    }
    let polys: Vec<&Quadratic> = cases.iter().map(|c| &c.poly).collect();
    let estimates = sign_expectations(&polys, sampler, trials)?;
    let gaussian = GaussianSampler::new(sampler.dim(), derive_key(seed, 1));
    let gauss_trials = cases
        .iter()
        .map(|c| match c.oracle {
            CaseOracle::MonteCarlo { trials: t } => t,
            CaseOracle::ClosedForm { .. } => trials,
        })
        .max()
        .unwrap_or(trials);
    let references = sign_expectations(&polys, &gaussian, gauss_trials)?;

    Ok(cases
        .iter()
        .zip(estimates.iter().zip(&references))
        .map(|(case, (est, reference))| {
            let (kind, oracle, oracle_stderr) = match case.oracle {
                CaseOracle::ClosedForm { value, .. } => ("closed_form", value, 0.0),
                CaseOracle::MonteCarlo { .. } => ("monte_carlo", reference.estimate, reference.stderr),
            };
            let stderr = (est.stderr.powi(2) + oracle_stderr.powi(2)).sqrt();
            let gap = (est.estimate - oracle).abs();
            let bound = tolerance.bound(stderr);
            DiscrepancyReport {
                case: case.name.clone(),
                oracle_kind: kind.to_string(),
                oracle,
                oracle_stderr,
                gaussian_estimate: Some(reference.estimate),
                gaussian_stderr: Some(reference.stderr),
                estimate: est.estimate,
                stderr,
                gap,
                tolerance: bound,
                boundary_sensitive: case.boundary_sensitive,
                pass: gap <= bound,
            }
        })
        .collect())
}

/// Discrepancy of the composed generator `Y` on every case of `suite`.
pub fn discrepancy_report(
    config: &GeneratorConfig,
    suite: &[PtfCase],
    trials: u64,
    seed: u64,
) -> Result<Vec<DiscrepancyReport>> {
    compare_with_oracle(suite, &GeneratorSampler::full(config, seed), trials, seed, Tolerance::STANDARD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::suite::standard_suite;

    #[test]
    fn gaussian_sampler_examples() {
        let g = GaussianSampler::new(2, 3);
        let t = 200_000;
        let lin = Quadratic::linear(vec![1.0, 0.0], 0.0).unwrap();
        let e = mc_expectation(&lin, &g, t).unwrap();
        assert!(e.estimate.abs() <= 5.0 * e.stderr);

        let shifted = Quadratic::linear(vec![1.0, 0.0], -1.0).unwrap();
        let e = mc_expectation(&shifted, &g, t).unwrap();
        assert!((e.estimate + 0.682_689_492_137_085_9).abs() <= 5.0 * e.stderr);

        let disc = Quadratic::diagonal(&[1.0, 1.0], vec![0.0, 0.0], -2.0).unwrap();
        let e = mc_expectation(&disc, &g, t).unwrap();
        assert!((e.estimate - (2.0 * (-1.0f64).exp() - 1.0)).abs() <= 5.0 * e.stderr);
    }

    #[test]
    fn too_few_trials_rejected() {
        let g = GaussianSampler::new(1, 0);
        let q = Quadratic::constant(1, 1.0);
        assert!(mc_expectation(&q, &g, 999).is_err());
        assert!(mc_expectation(&q, &g, 1000).is_ok());
    }

    #[test]
    fn constant_sign_cases_have_zero_gap() {
        let cfg = GeneratorConfig::empirical(4, 0.3, 3, 1e-3, 1e-3, 4).unwrap();
        let cases = vec![
            PtfCase::closed_form("plus", Quadratic::constant(4, 2.0)).unwrap(),
            PtfCase::closed_form("minus", Quadratic::constant(4, -0.5)).unwrap(),
        ];
        let rows = discrepancy_report(&cfg, &cases, 2000, 1).unwrap();
        for r in rows {
            assert_eq!((r.gap, r.stderr), (0.0, 0.0));
            assert!(r.pass);
        }
    }

    #[test]
    fn monte_carlo_oracle_cases() {
        let g = GaussianSampler::new(4, 77);
        let case = PtfCase::monte_carlo("mc", Quadratic::linear(vec![1.0, 1.0, 0.0, 0.0], 0.3).unwrap(), 20_000);
        let rows = compare_with_oracle(&[case], &g, 20_000, 5, Tolerance::STANDARD).unwrap();
        assert_eq!(rows[0].oracle_kind, "monte_carlo");
        assert!(rows[0].oracle_stderr > 0.0);
        assert!(rows[0].pass);
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = GeneratorConfig::empirical(4, 0.3, 3, 1e-3, 1e-3, 4).unwrap();
        let suite = standard_suite(4).unwrap();
        let a = discrepancy_report(&cfg, &suite, 5000, 42).unwrap();
        let b = discrepancy_report(&cfg, &suite, 5000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), suite.len());
        assert!(compare_with_oracle(&[], &GaussianSampler::new(4, 0), 5000, 0, Tolerance::STANDARD).is_err());
    }
}

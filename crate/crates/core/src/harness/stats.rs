//! Small statistical helpers shared by the experiments.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

/// `sgn` with the convention `sgn(0) = +1`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)`, accurate far into the tail.
pub fn phi_upper(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Monte-Carlo estimate of `E[sgn(·)]` from a count of nonnegative outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignEstimate {
    pub trials: u64,
    pub positives: u64,
    pub estimate: f64,
    /// `sqrt(p̂(1 − p̂) · 4 / trials)`, the standard error of a ±1 mean.
    pub stderr: f64,
}

impl SignEstimate {
    pub fn from_counts(positives: u64, trials: u64) -> Self {
        assert!(trials > 0 && positives <= trials);
        let p = positives as f64 / trials as f64;
        Self {
            trials,
            positives,
            estimate: 2.0 * p - 1.0,
            stderr: (p * (1.0 - p) * 4.0 / trials as f64).sqrt(),
        }
    }
}

/// Streaming mean and variance of a real statistic (plain sums; callers
/// merge chunks in a fixed order so results stay reproducible).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Standard error of a binomial proportion.
pub fn binomial_stderr(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Kolmogorov–Smirnov statistic `sup |F̂ − F|`; sorts `samples` in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_convention() {
        assert_eq!(sgn(0.0), 1.0);
        assert_eq!(sgn(-0.0), 1.0);
        assert_eq!(sgn(-1e-300), -1.0);
    }

    #[test]
    fn phi_values() {
        assert!((phi(0.0) - 0.5).abs() < 1e-15);
        assert!((phi(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((phi_upper(4.0) - 3.167_124_183_311_992e-5).abs() < 1e-18);
    }

    #[test]
    fn sign_estimate_stderr() {
        let e = SignEstimate::from_counts(500, 1000);
        assert_eq!(e.estimate, 0.0);
        assert!((e.stderr - (1.0f64 / 1000.0).sqrt()).abs() < 1e-15);
        let e = SignEstimate::from_counts(1000, 1000);
        assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean() - all.mean()).abs() < 1e-15);
        assert!((a.variance() - all.variance()).abs() < 1e-13);
    }

    #[test]
    fn ks_of_exact_quantiles_is_half_a_step() {
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }
}

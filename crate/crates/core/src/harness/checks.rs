//! Distributional checks of the building blocks and of the composed output:
//! Hermite moments, the approximate-Gaussian coupling and KS distance, and
//! Nisan fooling of read-once branching programs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::MIN_TRIALS;
use super::sampler::{purpose, run_trials, Sampler};
use super::stats::{ks_statistic, phi, Moments};
use crate::approx_gaussian::ApproxGaussianSpec;
use crate::error::{invalid, Result};
use crate::nisan::{NisanParams, NisanShape, Robp};
use crate::quadratic::{hermite_1d, MultiIndex, MAX_HERMITE_DEGREE};
use crate::rng::CounterRng;

/// `|z|` above which a moment counts as off.
pub const MOMENT_Z_LIMIT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    /// `coordinate:degree` pairs, 1-based coordinates, e.g. `1:2 4:1`.
    pub index: String,
    pub degree: u32,
    /// Gaussian value `E[H_α(X)]`; zero for every nonconstant index.
    pub expected: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub dim: usize,
    pub max_degree: u32,
    pub trials: u64,
    pub rows: Vec<MomentRow>,
    pub max_abs_z: f64,
    pub worst_index: String,
    pub z_limit: f64,
    pub pass: bool,
}

fn index_label(m: &MultiIndex) -> String {
    m.entries()
        .iter()
        .map(|&(i, d)| format!("{}:{d}", i + 1))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Empirical `E[H_α(S)]` for every multi-index `α` with
/// `1 ≤ |α| ≤ max_degree`, each compared with its Gaussian value 0 in units
/// of its own standard error.
pub fn moment_test<S: Sampler>(sampler: &S, max_degree: u32, trials: u64) -> Result<MomentReport> {
    if trials < MIN_TRIALS {
        return Err(invalid(format!("at least {MIN_TRIALS} trials are required, got {trials}")));
    }
    if max_degree == 0 || max_degree > MAX_HERMITE_DEGREE {
        return Err(invalid(format!("max degree must lie in 1..={MAX_HERMITE_DEGREE}")));
    }
    let n = sampler.dim();
    let stride = MAX_HERMITE_DEGREE as usize + 1;
    let indices = MultiIndex::enumerate(n, max_degree);
    // each index as up to four offsets into a per-sample table of h_d(x_v);
    // offset 0 holds h₀(x₁) = 1 and pads shorter products
    let offsets: Vec<[usize; 4]> = indices
        .iter()
        .map(|m| {
            let mut o = [0usize; 4];
            for (slot, &(v, d)) in o.iter_mut().zip(m.entries()) {
                *slot = v * stride + d as usize;
            }
            o
        })
        .collect();
    let sums = run_trials(
        sampler,
        trials,
        || (vec![Moments::default(); offsets.len()], vec![0.0; n * stride]),
        |(acc, table), x| {
            for (v, &xv) in x.iter().enumerate() {
                for d in 0..stride {
                    table[v * stride + d] = hermite_1d(d as u32, xv);
                }
            }
            for (m, o) in acc.iter_mut().zip(&offsets) {
                m.push(table[o[0]] * table[o[1]] * table[o[2]] * table[o[3]]);
            }
        },
        |(total, _), (part, _)| total.iter_mut().zip(&part).for_each(|(t, p)| t.merge(p)),
    )?
    .0;
    let rows: Vec<MomentRow> = indices
        .iter()
        .zip(&sums)
        .map(|(m, s)| {
            let stderr = s.stderr();
            let estimate = s.mean();
            MomentRow {
                index: index_label(m),
                degree: m.total_degree(),
                expected: 0.0,
                estimate,
                stderr,
                z: if stderr > 0.0 { estimate / stderr } else { f64::INFINITY },
            }
        })
        .collect();
    let (worst, max_abs_z) = rows
        .iter()
        .map(|r| (r.index.clone(), r.z.abs()))
        .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok(MomentReport {
        dim: n,
        max_degree,
        trials,
        rows,
        pass: max_abs_z <= MOMENT_Z_LIMIT,
        max_abs_z,
        worst_index: worst,
        z_limit: MOMENT_Z_LIMIT,
    })
}

/// How a grid index is drawn from random words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexDraw {
    /// Uniform on `[0, N)` (multiply-shift of a 64-bit word; bias ≤ N/2⁶⁴).
    Uniform,
    /// The generator's rule: `⌈log₂ N⌉` bits reduced mod `N`, which
    /// over-weights the lowest `2^⌈log₂ N⌉ − N` indices unless `N` is a power of two.
    SeedBits,
}

/// One-dimensional approximate Gaussians with random grid indices.
#[derive(Debug, Clone)]
pub struct ApproxGaussianSampler {
    pub spec: ApproxGaussianSpec,
    pub seed: u64,
    pub draw: IndexDraw,
}

impl Sampler for ApproxGaussianSampler {
    type Scratch = ();

    fn dim(&self) -> usize {
        1
    }

    fn label(&self) -> String {
        format!("approx_gaussian(delta={})", self.spec.delta)
    }

    fn sample(&self, trial: u64, _: &mut (), out: &mut [f64]) -> Result<()> {
        let mut rng = CounterRng::for_trial(self.seed, purpose::UNIFORM_PAIR, trial);
        let n = self.spec.resolution;
        let mut index = || match self.draw {
            IndexDraw::Uniform => ((rng.next_u64() as u128 * n as u128) >> 64) as u64,
            IndexDraw::SeedBits => (rng.next_u64() >> (64 - self.spec.bits_per_uniform)) % n,
        };
        let (j, k) = (index(), index());
        out[0] = self.spec.sample_unchecked(j, k);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub delta: f64,
    pub resolution: u64,
    pub pairs: u64,
    /// Pairs with `|X − Y| > δ`.
    pub violations: u64,
    pub fraction: f64,
    /// Pairs whose radius input fell below the first grid cell.
    pub tail_pairs: u64,
    pub pass: bool,
}

/// Draws `(u, v)` uniformly, couples the exact Box–Muller value with its grid
/// rounding, and checks `P(|X − Y| > δ) < δ`.
pub fn coupling_test(delta: f64, pairs: u64, seed: u64) -> Result<CouplingReport> {
    let spec = ApproxGaussianSpec::new(delta)?;
    if pairs == 0 {
        return Err(invalid("need at least one pair"));
    }
    let (violations, tail) = (0..pairs)
        .into_par_iter()
        .map(|t| {
            let mut rng = CounterRng::for_trial(seed, purpose::UNIFORM_PAIR, t);
            let (u, v) = (rng.open_unit(), rng.open_unit());
            let pair = spec.coupled_pair(u, v).expect("open-interval inputs");
            (((pair.exact - pair.approx).abs() > delta) as u64, pair.in_tail as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let fraction = violations as f64 / pairs as f64;
    Ok(CouplingReport {
        delta,
        resolution: spec.resolution,
        pairs,
        violations,
        fraction,
        tail_pairs: tail,
        pass: fraction < delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub delta: f64,
    pub draw: IndexDraw,
    pub samples: u64,
    pub statistic: f64,
    pub limit: f64,
    pub pass: bool,
}

/// Kolmogorov–Smirnov distance between `samples` approximate Gaussians of
/// precision `delta` and the standard normal.
pub fn ks_test(delta: f64, draw: IndexDraw, samples: u64, seed: u64, limit: f64) -> Result<KsReport> {
    let spec = ApproxGaussianSpec::new(delta)?;
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let sampler = ApproxGaussianSampler { spec, seed, draw };
    let mut values = run_trials(
        &sampler,
        samples,
        Vec::new,
        |acc: &mut Vec<f64>, x| acc.push(x[0]),
        |all, part| all.extend(part),
    )?;
    let statistic = ks_statistic(&mut values, phi);
    Ok(KsReport {
        delta,
        draw,
        samples,
        statistic,
        limit,
        pass: statistic <= limit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NisanFoolingRow {
    pub program: usize,
    pub exact: f64,
    pub empirical: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Runs `program` on the top `D` bits of the first `n` blocks of `seeds`
/// random Nisan expansions of shape `shape`, against the exact acceptance
/// probability under uniform input.
pub fn nisan_fooling(
    program: &Robp,
    shape: &NisanShape,
    seeds: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let d = program.block_bits();
    if shape.m < d || shape.m > 64 {
        return Err(invalid(format!("block width {} cannot carry {d}-bit steps", shape.m)));
    }
    if (1u64 << shape.k) < program.steps() as u64 {
        return Err(invalid("generator yields fewer blocks than the program reads"));
    }
    if seeds == 0 {
        return Err(invalid("need at least one seed"));
    }
    let exact = program.exact_expectation_uniform()?;
    let shift = shape.m - d;
    let accepted: u64 = (0..seeds)
        .into_par_iter()
        .map_init(Vec::new, |blocks, t| {
            let mut rng = CounterRng::for_trial(seed, purpose::NISAN_SEED, t);
            let params = NisanParams::random(shape.m, shape.k, &mut rng).expect("valid shape");
            params.expand_into(blocks);
            program.run_unchecked(blocks.iter().map(|b| b >> shift)) as u64
        })
        .sum();
    Ok((exact, accepted as f64 / seeds as f64))
}

/// [`nisan_fooling`] over `count` random programs of `n` steps, `D`-bit
/// blocks and `states` states.
#[allow(clippy::too_many_arguments)]
pub fn nisan_fooling_test(
    count: usize,
    n: usize,
    d: u32,
    states: usize,
    shape: &NisanShape,
    seeds: u64,
    seed: u64,
    tolerance: f64,
) -> Result<Vec<NisanFoolingRow>> {
    (0..count)
        .map(|i| {
            let mut rng = CounterRng::for_trial(seed, purpose::NISAN_SEED, u64::MAX - i as u64);
            let program = Robp::random(n, d, states, &mut rng)?;
            let (exact, empirical) = nisan_fooling(&program, shape, seeds, seed.wrapping_add(i as u64))?;
            let gap = (exact - empirical).abs();
            Ok(NisanFoolingRow {
                program: i,
                exact,
                empirical,
                gap,
                tolerance,
                pass: gap <= tolerance,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sampler::GaussianSampler;
    use crate::nisan::derive_nisan;

    #[test]
    fn moments_of_true_gaussian_pass() {
        let s = GaussianSampler::new(3, 21);
        let rep = moment_test(&s, 4, 100_000).unwrap();
        // C(3+4, 4) − 1 nonconstant indices
        assert_eq!(rep.rows.len(), 34);
        assert!(rep.pass, "worst {} at z = {}", rep.worst_index, rep.max_abs_z);
        assert!(rep.rows.iter().all(|r| r.expected == 0.0));
    }

    /// A deliberately biased sampler: coordinates shifted by 0.05.
    struct Shifted(GaussianSampler);

    impl Sampler for Shifted {
        type Scratch = ();
        fn dim(&self) -> usize {
            self.0.dim
        }
        fn label(&self) -> String {
            "shifted".into()
        }
        fn sample(&self, t: u64, s: &mut (), out: &mut [f64]) -> Result<()> {
            self.0.sample(t, s, out)?;
            out.iter_mut().for_each(|v| *v += 0.05);
            Ok(())
        }
    }

    #[test]
    fn moments_detect_bias() {
        let rep = moment_test(&Shifted(GaussianSampler::new(2, 1)), 2, 100_000).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.worst_index.split(':').nth(1), Some("1"));
    }

    #[test]
    fn coupling_small_run() {
        let rep = coupling_test(0.05, 100_000, 3).unwrap();
        assert_eq!(rep.resolution, 8000);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn ks_small_run() {
        let rep = ks_test(0.05, IndexDraw::Uniform, 50_000, 4, 0.01).unwrap();
        assert!(rep.pass, "{rep:?}");
        // a coarse grid is visibly non-Gaussian at this sample size
        let coarse = ks_test(0.45, IndexDraw::Uniform, 50_000, 4, 0.005).unwrap();
        assert!(coarse.statistic > rep.statistic);
        // N = 8000 read from 13 bits: indices below 192 are doubly likely
        let biased = ks_test(0.05, IndexDraw::SeedBits, 50_000, 4, 0.01).unwrap();
        assert!(biased.statistic > 0.01, "{biased:?}");
        // N = 2¹⁵ is a power of two, so the seed-bit rule is exact
        let exact = ks_test(2f64.powi(-5), IndexDraw::SeedBits, 50_000, 4, 0.01).unwrap();
        assert!(exact.pass, "{exact:?}");
    }

    #[test]
    fn nisan_fools_small_programs() {
        let shape = derive_nisan(8, 1, 2, 2f64.powi(-8), 1.0).unwrap();
        let rows = nisan_fooling_test(4, 8, 1, 4, &shape, 20_000, 5, 0.03).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");

        let parity = Robp::parity(8, 2).unwrap();
        let (exact, emp) = nisan_fooling(&parity, &derive_nisan(8, 2, 1, 0.01, 1.0).unwrap(), 20_000, 1).unwrap();
        assert_eq!(exact, 0.5);
        assert!((emp - 0.5).abs() < 0.03);
        let narrow = NisanShape { m: 1, k: 3, seed_bits: 7 };
        assert!(nisan_fooling(&parity, &narrow, 10, 0).is_err());
    }
}

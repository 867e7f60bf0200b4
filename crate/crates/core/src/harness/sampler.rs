//! Sample sources and the deterministic parallel trial loop.
//!
//! Every trial derives its randomness from `(experiment seed, trial index)`
//! alone. Trials are processed in fixed-size chunks; each chunk folds its
//! trials in order and the chunk results are merged in chunk order, so
//! results are identical for any thread count.

use rayon::prelude::*;

use crate::error::Result;
use crate::generator::{GeneratorConfig, SampleScratch};
use crate::rng::CounterRng;

/// Trials per parallel work unit. Part of the reproducibility contract:
/// changing it changes floating-point merge order.
pub const CHUNK_TRIALS: u64 = 4096;

/// Stream labels separating the roles randomness plays inside one trial.
pub mod purpose {
    pub const GAUSSIAN: u64 = 1;
    pub const MASTER_SEED: u64 = 2;
    pub const HYBRID_X: u64 = 3;
    pub const UNIFORM_PAIR: u64 = 4;
    pub const NISAN_SEED: u64 = 5;
}

/// A source of `dim()`-dimensional samples indexed by trial number.
pub trait Sampler: Sync {
    type Scratch: Default + Send;

    fn dim(&self) -> usize;

    /// Short label used in reports.
    fn label(&self) -> String;

    /// Writes the sample for `trial` into `out` (length `dim()`).
    fn sample(&self, trial: u64, scratch: &mut Self::Scratch, out: &mut [f64]) -> Result<()>;
}

/// True standard Gaussian vectors: counter-based SplitMix64 into Box–Muller.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    pub dim: usize,
    pub seed: u64,
}

impl GaussianSampler {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }
}

impl Sampler for GaussianSampler {
    type Scratch = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> String {
        "gaussian".into()
    }

    fn sample(&self, trial: u64, _: &mut (), out: &mut [f64]) -> Result<()> {
        CounterRng::for_trial(self.seed, purpose::GAUSSIAN, trial).fill_gaussian(out);
        Ok(())
    }
}

/// Fills `buf` with the master seed for `trial`.
pub fn master_seed(seed: u64, trial: u64, buf: &mut [u8]) {
    CounterRng::for_trial(seed, purpose::MASTER_SEED, trial).fill_bytes(buf);
}

#[derive(Debug, Default)]
pub struct GeneratorScratch {
    seed: Vec<u8>,
    inner: SampleScratch,
}

/// Draws a uniformly random master seed per trial and returns the generator
/// output (`Full`), a single family (`Family`), or the hybrid
/// `(1−δ³)^{i/2}X + δ^{3/2}Σ_{j≤i} w_j Y_j` with fresh Gaussian `X` (`Hybrid`).
#[derive(Debug, Clone)]
pub struct GeneratorSampler<'a> {
    pub config: &'a GeneratorConfig,
    pub seed: u64,
    pub kind: GeneratorOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorOutput {
    Full,
    Family(usize),
    Hybrid(usize),
}

impl<'a> GeneratorSampler<'a> {
    pub fn full(config: &'a GeneratorConfig, seed: u64) -> Self {
        Self {
            config,
            seed,
            kind: GeneratorOutput::Full,
        }
    }

    pub fn family(config: &'a GeneratorConfig, seed: u64, family: usize) -> Self {
        Self {
            config,
            seed,
            kind: GeneratorOutput::Family(family),
        }
    }

    pub fn hybrid(config: &'a GeneratorConfig, seed: u64, step: usize) -> Self {
        Self {
            config,
            seed,
            kind: GeneratorOutput::Hybrid(step),
        }
    }

    /// Seed bytes a trial needs: only the families actually read are drawn.
    fn seed_bytes(&self) -> usize {
        let families = match self.kind {
            GeneratorOutput::Full => self.config.ell,
            GeneratorOutput::Family(i) => i + 1,
            GeneratorOutput::Hybrid(i) => i,
        };
        (self.config.family.seed_bits * families).div_ceil(8)
    }
}

impl Sampler for GeneratorSampler<'_> {
    type Scratch = GeneratorScratch;

    fn dim(&self) -> usize {
        self.config.n
    }

    fn label(&self) -> String {
        match self.kind {
            GeneratorOutput::Full => "generator".into(),
            GeneratorOutput::Family(i) => format!("family{}", i + 1),
            GeneratorOutput::Hybrid(i) => format!("hybrid{i}"),
        }
    }

    fn sample(&self, trial: u64, scratch: &mut GeneratorScratch, out: &mut [f64]) -> Result<()> {
        scratch.seed.resize(self.seed_bytes(), 0);
        master_seed(self.seed, trial, &mut scratch.seed);
        match self.kind {
            GeneratorOutput::Full => self.config.sample_into(&scratch.seed, &mut scratch.inner, out),
            GeneratorOutput::Family(i) => {
                let y = self.config.family(&scratch.seed, i)?;
                out.copy_from_slice(&y);
                Ok(())
            }
            GeneratorOutput::Hybrid(i) => {
                let mut x = vec![0.0; self.config.n];
                CounterRng::for_trial(self.seed, purpose::HYBRID_X, trial).fill_gaussian(&mut x);
                self.config.hybrid_into(&x, i, &scratch.seed, &mut scratch.inner, out)
            }
        }
    }
}

/// Runs `trials` samples through `step`, folding into per-chunk accumulators
/// created by `init` and merged in chunk order by `merge`.
pub fn run_trials<S, T, I, F, M>(sampler: &S, trials: u64, init: I, step: F, merge: M) -> Result<T>
where
    S: Sampler,
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, &[f64]) + Sync,
    M: Fn(&mut T, T),
{
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let dim = sampler.dim();
    let partials: Vec<Result<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let mut scratch = S::Scratch::default();
            let mut buf = vec![0.0; dim];
            let end = ((c + 1) * CHUNK_TRIALS).min(trials);
            for t in c * CHUNK_TRIALS..end {
                sampler.sample(t, &mut scratch, &mut buf)?;
                step(&mut acc, &buf);
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for part in partials {
        merge(&mut total, part?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let s = GaussianSampler::new(3, 11);
        let run = || {
            run_trials(
                &s,
                20_000,
                || 0.0f64,
                |acc, x| *acc += x[0] * x[1] + x[2],
                |a, b| *a += b,
            )
            .unwrap()
        };
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
        assert_eq!(single.to_bits(), multi.to_bits());
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let s = GaussianSampler::new(4, 5);
        let mut a = vec![0.0; 4];
        let mut b = vec![0.0; 4];
        s.sample(17, &mut (), &mut a).unwrap();
        s.sample(3, &mut (), &mut b).unwrap();
        s.sample(17, &mut (), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generator_sampler_kinds() {
        let cfg = GeneratorConfig::empirical(3, 0.3, 4, 1e-3, 1e-3, 4).unwrap();
        let full = GeneratorSampler::full(&cfg, 9);
        let mut out = vec![0.0; 3];
        full.sample(2, &mut Default::default(), &mut out).unwrap();
        let mut seed = vec![0u8; cfg.seed_bytes()];
        master_seed(9, 2, &mut seed);
        assert_eq!(out, cfg.sample(&seed).unwrap());

        // the family sampler reads a prefix of the same master seed
        let fam = GeneratorSampler::family(&cfg, 9, 0);
        fam.sample(2, &mut Default::default(), &mut out).unwrap();
        assert_eq!(out, cfg.family(&seed, 0).unwrap());

        let hyb = GeneratorSampler::hybrid(&cfg, 9, 0);
        hyb.sample(2, &mut Default::default(), &mut out).unwrap();
        let mut x = vec![0.0; 3];
        CounterRng::for_trial(9, purpose::HYBRID_X, 2).fill_gaussian(&mut x);
        assert_eq!(out, x);
    }
}

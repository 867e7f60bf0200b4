//! The composed generator: `ℓ` independent Nisan-seeded families of `n`
//! approximate Gaussians, combined with weights `(1−δ³)^{(i−1)/2}` and
//! normalized to unit variance.
//!
//! # Seed layout
//!
//! The master seed is a byte string read most-significant bit first. Family
//! `i` (0-based) occupies bits `[i·F, (i+1)·F)` with `F = m·(2k+1)`, as the
//! `m`-bit words `x0, h₁.a, h₁.b, …, h_k.a, h_k.b`. Expanding that Nisan seed
//! gives `2^k` blocks of `m` bits; variable `v` reads its `j` then `k` grid
//! index (each `⌈log₂ N⌉` bits, big-endian) from blocks
//! `[v·B, (v+1)·B)` with `B = ⌈2⌈log₂ N⌉ / m⌉`, discarding any leftover bits.

use serde::{Deserialize, Serialize};

use crate::approx_gaussian::{ApproxGaussianSpec, MIN_DELTA};
use crate::bits::{read_bytes_be, BitReader};
use crate::error::{invalid, Error, Result};
use crate::nisan::{ceil_log2, seed_bits, NisanParams, DEFAULT_C1};

/// Widest supported Nisan block.
pub const MAX_BLOCK_BITS: u32 = 64;
/// Floor applied to the ROBP fooling error `δ₂`.
pub const DELTA2_FLOOR: f64 = 5.421_010_862_427_522e-20; // 2^-64
/// Ceiling on `δ₁`; the sampler needs `δ₁ < 1/2`.
pub const DELTA1_CEILING: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every parameter derived from `(n, ε, C)`.
    Theorem,
    /// `δ, ℓ, δ₁, δ₂, M` set directly for desk-scale runs.
    Empirical,
}

/// How one family's bits are sized and consumed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyLayout {
    /// Nisan block width actually used.
    pub block_bits: u32,
    /// `⌈c₁(M + D + log₂(n/δ₂))⌉` before capping at [`MAX_BLOCK_BITS`].
    pub block_bits_formula: u32,
    /// Bits one program step reads: one approximate Gaussian.
    pub step_bits: u32,
    pub blocks_per_variable: usize,
    pub blocks_used: usize,
    /// Nisan recursion depth `k`.
    pub depth: u32,
    pub seed_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLayout {
    pub word_order: String,
    pub family_bits: usize,
    pub families: usize,
    pub total_bits: usize,
    pub total_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub mode: Mode,
    pub n: usize,
    pub epsilon: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub delta: f64,
    pub ell: usize,
    /// Approximate-Gaussian precision used.
    pub delta1: f64,
    /// `log₂` of the theorem's `δ₁`, which underflows `f64` in practice.
    pub delta1_theory_log2: Option<f64>,
    /// ROBP fooling error used to size the Nisan blocks.
    pub delta2: f64,
    pub delta2_theory_log2: Option<f64>,
    /// ROBP memory bits `M`.
    pub memory_bits: u32,
    pub c1: f64,
    pub weights: Vec<f64>,
    pub normalizer: f64,
    pub gaussian: ApproxGaussianSpec,
    pub family: FamilyLayout,
    pub seed_layout: SeedLayout,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

impl GeneratorConfig {
    /// Parameters from `(n, ε, C)`: `δ = 1/(C ln(1/ε))`,
    /// `ℓ = ⌈δ⁻³ ln(1/ε)⌉`, `δ₁ = δ₂ = (n/δ)^{−1/δ}`, `M = ⌈δ⁻² log₂(n/δ)⌉`.
    pub fn derive(n: usize, epsilon: f64, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
        }
        if !(c >= 1.0) {
            return Err(invalid(format!("C must be at least 1, got {c}")));
        }
        let log_inv_eps = (1.0 / epsilon).ln();
        let delta = 1.0 / (c * log_inv_eps);
        if delta >= 1.0 {
            return Err(invalid(format!(
                "C·ln(1/ε) = {:.4} must exceed 1 so that δ < 1",
                1.0 / delta
            )));
        }
        let ell = (delta.powi(-3) * log_inv_eps).ceil() as usize;
        let log2_n_over_delta = (n as f64 / delta).log2();
        let theory_log2 = -log2_n_over_delta / delta;
        let delta1 = 2f64.powf(theory_log2).clamp(MIN_DELTA, DELTA1_CEILING);
        let delta2 = 2f64.powf(theory_log2).max(DELTA2_FLOOR);
        let memory_bits = (log2_n_over_delta / (delta * delta)).ceil() as u32;
        let mut cfg = Self::assemble(Mode::Theorem, n, delta, ell, delta1, delta2, memory_bits, DEFAULT_C1)?;
        cfg.epsilon = Some(epsilon);
        cfg.c = Some(c);
        cfg.delta1_theory_log2 = Some(theory_log2);
        cfg.delta2_theory_log2 = Some(theory_log2);
        Ok(cfg)
    }

    /// Desk-scale configuration with every knob set directly.
    pub fn empirical(
        n: usize,
        delta: f64,
        ell: usize,
        delta1: f64,
        delta2: f64,
        memory_bits: u32,
    ) -> Result<Self> {
        Self::empirical_with_c1(n, delta, ell, delta1, delta2, memory_bits, DEFAULT_C1)
    }

    pub fn empirical_with_c1(
        n: usize,
        delta: f64,
        ell: usize,
        delta1: f64,
        delta2: f64,
        memory_bits: u32,
        c1: f64,
    ) -> Result<Self> {
        if n == 0 || ell == 0 {
            return Err(invalid("n and ell must be positive"));
        }
        if !(delta2 > 0.0 && delta2 < 1.0) {
            return Err(invalid(format!("delta2 must lie in (0, 1), got {delta2}")));
        }
        Self::assemble(Mode::Empirical, n, delta, ell, delta1, delta2, memory_bits, c1)
    }

    /// The acceptance experiments' configuration: `n = 16, δ = 1/4, ℓ = 64,
    /// M = 24, δ₁ = δ₂ = 2⁻²⁰`.
    pub fn desk(n: usize) -> Result<Self> {
        let d1 = 2f64.powi(-20);
        Self::empirical(n, 0.25, 64, d1, d1, 24)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        mode: Mode,
        n: usize,
        delta: f64,
        ell: usize,
        delta1: f64,
        delta2: f64,
        memory_bits: u32,
        c1: f64,
    ) -> Result<Self> {
        check_delta(delta)?;
        if !(c1 > 0.0) {
            return Err(invalid("c1 must be positive"));
        }
        let gaussian = ApproxGaussianSpec::new(delta1)?;
        let step_bits = gaussian.bits_total;
        let formula = (c1 * (memory_bits as f64 + step_bits as f64 + (n as f64 / delta2).log2())).ceil();
        let block_bits_formula = formula.clamp(1.0, u32::MAX as f64) as u32;
        let block_bits = block_bits_formula.min(MAX_BLOCK_BITS);
        let blocks_per_variable = step_bits.div_ceil(block_bits) as usize;
        let blocks_used = n * blocks_per_variable;
        let depth = ceil_log2(blocks_used as u64);
        let family_bits = seed_bits(block_bits, depth);

        let decay = 1.0 - delta.powi(3);
        let weights: Vec<f64> = (0..ell).map(|i| decay.powf(i as f64 / 2.0)).collect();
        let normalizer = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let total_bits = family_bits * ell;

        Ok(Self {
            mode,
            n,
            epsilon: None,
            c: None,
            delta,
            ell,
            delta1,
            delta1_theory_log2: None,
            delta2,
            delta2_theory_log2: None,
            memory_bits,
            c1,
            weights,
            normalizer,
            gaussian,
            family: FamilyLayout {
                block_bits,
                block_bits_formula,
                step_bits,
                blocks_per_variable,
                blocks_used,
                depth,
                seed_bits: family_bits,
            },
            seed_layout: SeedLayout {
                word_order: "x0,h1.a,h1.b,...,hk.a,hk.b".to_string(),
                family_bits,
                families: ell,
                total_bits,
                total_bytes: total_bits.div_ceil(8),
            },
        })
    }

    /// Exact number of seed bits consumed by [`sample`](Self::sample).
    pub fn seed_length(&self) -> usize {
        self.seed_layout.total_bits
    }

    pub fn seed_bytes(&self) -> usize {
        self.seed_layout.total_bytes
    }

    pub fn family_offset(&self, family: usize) -> usize {
        family * self.family.seed_bits
    }

    /// `ln(1/ε)⁶ · log₂ n · log₂ log₂(n/ε)`: the theorem's seed-length shape
    /// without constants.
    pub fn theorem_seed_formula(n: usize, epsilon: f64) -> f64 {
        let nf = n as f64;
        let loglog = (nf / epsilon).log2().log2().max(0.0);
        (1.0 / epsilon).ln().powi(6) * nf.log2() * loglog
    }

    /// Per-coordinate variance of hybrid `i`, treating each family as unit variance.
    pub fn hybrid_variance(&self, i: usize) -> f64 {
        let decay = 1.0 - self.delta.powi(3);
        let families: f64 = self.weights[..i].iter().map(|w| w * w).sum();
        decay.powi(i as i32) + self.delta.powi(3) * families
    }

    fn check_seed(&self, seed: &[u8], families: usize) -> Result<()> {
        let needed = self.family_offset(families);
        let available = seed.len() * 8;
        if available < needed {
            return Err(Error::SeedUnderflow {
                needed,
                available,
                family: Some(available / self.family.seed_bits),
            });
        }
        Ok(())
    }

    fn nisan_params(&self, seed: &[u8], family: usize) -> Result<NisanParams> {
        let m = self.family.block_bits;
        let mut offset = self.family_offset(family);
        NisanParams::from_words(m, self.family.depth, || {
            let w = read_bytes_be(seed, offset, m);
            offset += m as usize;
            w
        })
        .map_err(|e| match e {
            Error::SeedUnderflow { needed, available, .. } => Error::SeedUnderflow {
                needed,
                available,
                family: Some(family),
            },
            other => other,
        })
    }

    fn family_into(&self, seed: &[u8], family: usize, scratch: &mut Vec<u64>, out: &mut [f64]) -> Result<()> {
        let params = self.nisan_params(seed, family)?;
        params.expand_into(scratch);
        let bpv = self.family.blocks_per_variable;
        for (v, slot) in out.iter_mut().enumerate() {
            let mut reader = BitReader::new(&scratch[v * bpv..(v + 1) * bpv], self.family.block_bits);
            let (j, k) = self.gaussian.consume_bits(&mut reader)?;
            *slot = self.gaussian.sample_unchecked(j, k);
        }
        Ok(())
    }

    /// Family `Y_{family+1}`: `n` approximate Gaussians from one seed slice.
    pub fn family(&self, seed: &[u8], family: usize) -> Result<Vec<f64>> {
        if family >= self.ell {
            return Err(invalid(format!("family {family} out of range (ell = {})", self.ell)));
        }
        self.check_seed(seed, family + 1)?;
        let mut out = vec![0.0; self.n];
        self.family_into(seed, family, &mut Vec::new(), &mut out)?;
        Ok(out)
    }

    /// `Y = Σ wᵢ Yᵢ / normalizer`, summed in family order with Kahan compensation.
    pub fn sample(&self, seed: &[u8]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.sample_into(seed, &mut SampleScratch::default(), &mut out)?;
        Ok(out)
    }

    pub fn sample_into(&self, seed: &[u8], scratch: &mut SampleScratch, out: &mut [f64]) -> Result<()> {
        self.check_seed(seed, self.ell)?;
        self.weighted_sum(seed, self.ell, scratch, out)?;
        for v in out.iter_mut() {
            *v /= self.normalizer;
        }
        Ok(())
    }

    fn weighted_sum(&self, seed: &[u8], families: usize, scratch: &mut SampleScratch, out: &mut [f64]) -> Result<()> {
        if out.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: out.len(),
            });
        }
        scratch.family.resize(self.n, 0.0);
        scratch.compensation.clear();
        scratch.compensation.resize(self.n, 0.0);
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..families {
            self.family_into(seed, i, &mut scratch.blocks, &mut scratch.family)?;
            let w = self.weights[i];
            for ((sum, comp), &y) in out.iter_mut().zip(scratch.compensation.iter_mut()).zip(&scratch.family) {
                let term = w * y - *comp;
                let t = *sum + term;
                *comp = (t - *sum) - term;
                *sum = t;
            }
        }
        Ok(())
    }

    /// Hybrid `i`: `(1−δ³)^{i/2} X + δ^{3/2} Σ_{j≤i} w_j Y_j`.
    pub fn hybrid_sample(&self, x: &[f64], i: usize, seed: &[u8]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.hybrid_into(x, i, seed, &mut SampleScratch::default(), &mut out)?;
        Ok(out)
    }

    pub fn hybrid_into(
        &self,
        x: &[f64],
        i: usize,
        seed: &[u8],
        scratch: &mut SampleScratch,
        out: &mut [f64],
    ) -> Result<()> {
        if i > self.ell {
            return Err(invalid(format!("hybrid index {i} exceeds ell = {}", self.ell)));
        }
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        self.check_seed(seed, i)?;
        self.weighted_sum(seed, i, scratch, out)?;
        let keep = (1.0 - self.delta.powi(3)).powf(i as f64 / 2.0);
        let blend = self.delta.powf(1.5);
        for (o, &xv) in out.iter_mut().zip(x) {
            *o = keep * xv + blend * *o;
        }
        Ok(())
    }
}

/// One row of the seed-length comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub n: usize,
    pub epsilon: f64,
    pub ell: usize,
    pub block_bits: u32,
    pub depth: u32,
    pub family_bits: usize,
    pub seed_bits: usize,
    /// [`GeneratorConfig::theorem_seed_formula`] at `(n, ε)`.
    pub formula: f64,
    /// `seed_bits / formula`; absent when the formula vanishes (`n = 1`).
    pub ratio_to_formula: Option<f64>,
}

impl SeedRow {
    pub const CSV_HEADER: &'static str = "n,epsilon,ell,block_bits,depth,family_bits,seed_bits,formula,ratio_to_formula";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.epsilon,
            self.ell,
            self.block_bits,
            self.depth,
            self.family_bits,
            self.seed_bits,
            self.formula,
            self.ratio_to_formula.map(|r| r.to_string()).unwrap_or_default()
        )
    }
}

/// Exact seed bits of the derived configuration for each `n`, next to the
/// theorem's asymptotic shape. Purely analytic; nothing is sampled.
pub fn seed_table(ns: &[usize], epsilon: f64, c: f64) -> Result<Vec<SeedRow>> {
    ns.iter()
        .map(|&n| {
            let cfg = GeneratorConfig::derive(n, epsilon, c)?;
            let formula = GeneratorConfig::theorem_seed_formula(n, epsilon);
            Ok(SeedRow {
                n,
                epsilon,
                ell: cfg.ell,
                block_bits: cfg.family.block_bits,
                depth: cfg.family.depth,
                family_bits: cfg.family.seed_bits,
                seed_bits: cfg.seed_length(),
                formula,
                ratio_to_formula: (formula > 0.0).then(|| cfg.seed_length() as f64 / formula),
            })
        })
        .collect()
}

/// Default sweep for the seed table: `n = 2^0, 2^2, …, 2^20`.
pub fn default_seed_sweep() -> Vec<usize> {
    (0..=20).step_by(2).map(|e| 1usize << e).collect()
}

/// Reusable buffers for repeated sampling.
#[derive(Debug, Default, Clone)]
pub struct SampleScratch {
    blocks: Vec<u64>,
    family: Vec<f64>,
    compensation: Vec<f64>,
}

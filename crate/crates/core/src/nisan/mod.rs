//! Nisan's generator for read-once branching programs, with pairwise
//! independent affine hashes over GF(2^m).

mod gf2m;
mod robp;

pub use gf2m::{clmul, clmul_portable, Gf2m, IRREDUCIBLE_LOW};
pub use robp::{Robp, MAX_ROBP_WORK};

use serde::{Deserialize, Serialize};

use crate::bits::low_mask;
use crate::error::{invalid, Result};
use crate::rng::CounterRng;

/// `h(x) = a·x ⊕ b` over GF(2^m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFunc {
    pub a: u64,
    pub b: u64,
}

impl HashFunc {
    #[inline]
    pub fn apply(&self, field: &Gf2m, x: u64) -> u64 {
        field.mul(self.a, x) ^ self.b
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NisanParams {
    pub m: u32,
    pub x0: u64,
    /// `h_1, …, h_k`; the recursion depth is `hashes.len()`.
    pub hashes: Vec<HashFunc>,
}

/// Seed bits for block width `m` and depth `k`: `x0` plus two words per hash.
pub fn seed_bits(m: u32, k: u32) -> usize {
    m as usize * (2 * k as usize + 1)
}

impl NisanParams {
    pub fn new(m: u32, x0: u64, hashes: Vec<HashFunc>) -> Result<Self> {
        let field = Gf2m::new(m)?;
        let mask = field.mask();
        if x0 & !mask != 0 || hashes.iter().any(|h| (h.a | h.b) & !mask != 0) {
            return Err(invalid(format!("seed words must fit in {m} bits")));
        }
        Ok(Self { m, x0, hashes })
    }

    pub fn depth(&self) -> u32 {
        self.hashes.len() as u32
    }

    pub fn seed_bits(&self) -> usize {
        seed_bits(self.m, self.depth())
    }

    /// Parses `(x0, h₁a, h₁b, …, h_k a, h_k b)` from successive `m`-bit words.
    pub fn from_words(m: u32, k: u32, mut next: impl FnMut() -> Result<u64>) -> Result<Self> {
        let x0 = next()?;
        let mut hashes = Vec::with_capacity(k as usize);
        for _ in 0..k {
            let a = next()?;
            let b = next()?;
            hashes.push(HashFunc { a, b });
        }
        Self::new(m, x0, hashes)
    }

    pub fn random(m: u32, k: u32, rng: &mut CounterRng) -> Result<Self> {
        let mask = low_mask(m);
        Self::from_words(m, k, || Ok(rng.next_u64() & mask))
    }

    /// All `2^k` blocks.
    pub fn expand(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.expand_into(&mut out);
        out
    }

    /// Writes the `2^k` blocks into `out` (resized as needed).
    ///
    /// Block `s` with binary digits `s_k … s_1` is
    /// `h_1^{s_1} ∘ ⋯ ∘ h_k^{s_k}(x0)`, which is the recursion
    /// `G_j(x) = G_{j−1}(x) ‖ G_{j−1}(h_j(x))` unrolled.
    pub fn expand_into(&self, out: &mut Vec<u64>) {
        let field = Gf2m::new(self.m).expect("validated at construction");
        let k = self.hashes.len();
        let total = 1usize << k;
        out.clear();
        out.resize(total, 0);
        out[0] = self.x0;
        // after processing h_j the filled entries sit at stride 2^{j-1}
        let mut stride = total;
        for h in self.hashes.iter().rev() {
            let half = stride / 2;
            let mut pos = 0;
            while pos < total {
                out[pos + half] = h.apply(&field, out[pos]);
                pos += stride;
            }
            stride = half;
        }
    }
}

/// Shape of a Nisan generator sized for a program family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NisanShape {
    /// Block width `⌈c₁·(M + D + log₂(n_blocks/ε))⌉`; may exceed 64.
    pub m: u32,
    pub k: u32,
    pub seed_bits: usize,
}

pub const DEFAULT_C1: f64 = 1.0;

pub(crate) fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Sizes the generator for `n_blocks` steps of `d` bits with `memory_bits`
/// of state and fooling error `eps`.
pub fn derive_nisan(n_blocks: u64, d: u32, memory_bits: u32, eps: f64, c1: f64) -> Result<NisanShape> {
    if n_blocks == 0 || d == 0 || !(eps > 0.0 && eps < 1.0) || !(c1 > 0.0) {
        return Err(invalid("derive_nisan needs positive sizes, eps in (0, 1) and c1 > 0"));
    }
    let m = (c1 * (memory_bits as f64 + d as f64 + (n_blocks as f64 / eps).log2())).ceil() as u32;
    let k = ceil_log2(n_blocks);
    Ok(NisanShape {
        m,
        k,
        seed_bits: seed_bits(m, k),
    })
}

/// Exhaustively counts input pairs `x₁ ≠ x₂` for which some output pair
/// `(y₁, y₂)` is not hit by exactly one hash `(a, b)`; zero means the family
/// `a·x ⊕ b` over GF(2^m) is exactly pairwise independent. `m ≤ 8`.
pub fn pairwise_independence_violations(m: u32) -> Result<u64> {
    if !(1..=8).contains(&m) {
        return Err(invalid(format!("exhaustive check supports 1 ≤ m ≤ 8, got {m}")));
    }
    let field = Gf2m::new(m)?;
    let size = 1u64 << m;
    let mut counts = vec![0u32; (size * size) as usize];
    let mut violations = 0;
    for x1 in 0..size {
        for x2 in (0..size).filter(|&x2| x2 != x1) {
            counts.iter_mut().for_each(|c| *c = 0);
            for a in 0..size {
                for b in 0..size {
                    let h = HashFunc { a, b };
                    counts[(h.apply(&field, x1) * size + h.apply(&field, x2)) as usize] += 1;
                }
            }
            violations += counts.iter().any(|&c| c != 1) as u64;
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expand_base_and_identity_hash() {
        let p = NisanParams::new(8, 0xAB, vec![]).unwrap();
        assert_eq!(p.expand(), vec![0xAB]);
        let p = NisanParams::new(8, 0xAB, vec![HashFunc { a: 1, b: 0 }]).unwrap();
        assert_eq!(p.expand(), vec![0xAB, 0xAB]);
    }

    #[test]
    fn expand_hand_computed_gf16() {
        // modulus x⁴+x+1: 3·9 = 8, 8⊕5 = 0xD; 2·9 = 1, 1⊕1 = 0; h₁(0) = 5
        let p = NisanParams::new(
            4,
            0x9,
            vec![HashFunc { a: 0x3, b: 0x5 }, HashFunc { a: 0x2, b: 0x1 }],
        )
        .unwrap();
        assert_eq!(p.expand(), vec![0x9, 0xD, 0x0, 0x5]);
    }

    #[test]
    fn expand_matches_recursive_definition() {
        fn recursive(field: &Gf2m, x: u64, hashes: &[HashFunc]) -> Vec<u64> {
            match hashes.split_last() {
                None => vec![x],
                Some((h, rest)) => {
                    let mut left = recursive(field, x, rest);
                    left.extend(recursive(field, h.apply(field, x), rest));
                    left
                }
            }
        }
        let mut rng = CounterRng::new(3);
        for (m, k) in [(5u32, 4u32), (17, 6), (64, 7)] {
            let p = NisanParams::random(m, k, &mut rng).unwrap();
            let field = Gf2m::new(m).unwrap();
            assert_eq!(p.expand(), recursive(&field, p.x0, &p.hashes));
        }
    }

    #[test]
    fn output_length_and_seed_accounting() {
        let mut rng = CounterRng::new(4);
        for k in 0..8 {
            let p = NisanParams::random(12, k, &mut rng).unwrap();
            assert_eq!(p.expand().len(), 1 << k);
            assert_eq!(p.seed_bits(), 12 * (2 * k as usize + 1));
        }
    }

    #[test]
    fn prefix_property() {
        let mut rng = CounterRng::new(5);
        for k in 1..7 {
            let p = NisanParams::random(20, k, &mut rng).unwrap();
            let shorter = NisanParams::new(20, p.x0, p.hashes[..(k - 1) as usize].to_vec()).unwrap();
            let full = p.expand();
            assert_eq!(&full[..1 << (k - 1)], shorter.expand().as_slice());
        }
    }

    #[test]
    fn words_must_fit() {
        assert!(NisanParams::new(4, 0x10, vec![]).is_err());
        assert!(NisanParams::new(4, 0x1, vec![HashFunc { a: 0x1F, b: 0 }]).is_err());
    }

    #[test]
    fn derive_examples() {
        let s = derive_nisan(1, 2, 3, 0.01, DEFAULT_C1).unwrap();
        assert_eq!(s.k, 0);
        assert_eq!(s.seed_bits, s.m as usize);

        let s = derive_nisan(1024, 2, 20, 2f64.powi(-20), DEFAULT_C1).unwrap();
        assert_eq!((s.m, s.k, s.seed_bits), (52, 10, 1092));

        for n in [3u64, 100, 1000, 1 << 20] {
            let a = derive_nisan(n, 2, 8, 1e-3, 1.0).unwrap();
            let b = derive_nisan(2 * n, 2, 8, 1e-3, 1.0).unwrap();
            assert_eq!(b.k, a.k + 1);
        }
        assert!(derive_nisan(0, 2, 3, 0.1, 1.0).is_err());
    }

    #[test]
    fn hash_family_pairwise_independent_exhaustive() {
        for m in 1..=4u32 {
            assert_eq!(pairwise_independence_violations(m).unwrap(), 0, "m = {m}");
        }
        assert!(pairwise_independence_violations(0).is_err());
        assert!(pairwise_independence_violations(9).is_err());
    }
}

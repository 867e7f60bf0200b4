//! Arithmetic in GF(2^m), m ≤ 64, modulo the lexicographically first
//! irreducible polynomial of each degree.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Low-order part of the modulus `x^m + r(x)` for `m = 1..=64` (index `m − 1`).
/// Each entry is the smallest `r` making the polynomial irreducible.
pub const IRREDUCIBLE_LOW: [u64; 64] = [
    0, 3, 3, 3, 5, 3, 3, 27, 3, 9, 5, 9, 27, 33, 3, 43, //
    9, 9, 39, 9, 5, 3, 33, 27, 9, 27, 39, 3, 5, 3, 9, 141, //
    75, 27, 5, 53, 63, 99, 17, 57, 9, 39, 89, 33, 27, 3, 33, 45, //
    113, 29, 75, 9, 71, 125, 71, 149, 17, 99, 123, 3, 39, 105, 3, 27,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gf2m {
    m: u32,
    low: u64,
    #[serde(skip, default = "hardware_clmul")]
    hardware: bool,
}

fn hardware_clmul() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::is_x86_feature_detected!("pclmulqdq")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

impl Gf2m {
    pub fn new(m: u32) -> Result<Self> {
        if !(1..=64).contains(&m) {
            return Err(invalid(format!("field degree must be in 1..=64, got {m}")));
        }
        Ok(Self {
            m,
            low: IRREDUCIBLE_LOW[(m - 1) as usize],
            hardware: hardware_clmul(),
        })
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn mask(&self) -> u64 {
        crate::bits::low_mask(self.m)
    }

    /// Full modulus as a 65-bit value.
    pub fn modulus(&self) -> u128 {
        (1u128 << self.m) | self.low as u128
    }

    #[inline]
    pub fn reduce(&self, mut p: u128) -> u64 {
        let mask = self.mask() as u128;
        loop {
            let hi = p >> self.m;
            if hi == 0 {
                return p as u64;
            }
            // x^m ≡ r(x); hi has degree < m − 1 so it fits a u64
            p = (p & mask) ^ self.clmul(hi as u64, self.low);
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(self.clmul(a, b))
    }

    #[inline]
    fn clmul(&self, a: u64, b: u64) -> u128 {
        #[cfg(target_arch = "x86_64")]
        {
            if self.hardware {
                // SAFETY: `hardware` is only set when pclmulqdq was detected.
                return unsafe { clmul_pclmul(a, b) };
            }
        }
        clmul_portable(a, b)
    }
}

/// Carryless product of two 64-bit polynomials.
#[inline]
pub fn clmul(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if hardware_clmul() {
            // SAFETY: the required CPU feature was detected at runtime.
            return unsafe { clmul_pclmul(a, b) };
        }
    }
    clmul_portable(a, b)
}

#[inline]
pub fn clmul_portable(a: u64, b: u64) -> u128 {
    let (a, mut b) = if a.count_ones() < b.count_ones() { (b, a) } else { (a, b) };
    let wide = a as u128;
    let mut acc = 0u128;
    while b != 0 {
        acc ^= wide << b.trailing_zeros();
        b &= b - 1;
    }
    acc
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq,sse2")]
unsafe fn clmul_pclmul(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::{_mm_clmulepi64_si128, _mm_cvtsi128_si64, _mm_cvtsi64_si128, _mm_srli_si128};
    let x = _mm_cvtsi64_si128(a as i64);
    let y = _mm_cvtsi64_si128(b as i64);
    let p = _mm_clmulepi64_si128(x, y, 0);
    let lo = _mm_cvtsi128_si64(p) as u64;
    let hi = _mm_cvtsi128_si64(_mm_srli_si128(p, 8)) as u64;
    ((hi as u128) << 64) | lo as u128
}

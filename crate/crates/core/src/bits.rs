//! Big-endian bit reader over fixed-width words.

use crate::error::{Error, Result};

/// Reads bits most-significant first from a sequence of words, each of which
/// contributes its low `width` bits.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    words: &'a [u64],
    width: u32,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(words: &'a [u64], width: u32) -> Self {
        assert!((1..=64).contains(&width), "word width must be in 1..=64");
        Self {
            words,
            width,
            pos: 0,
        }
    }

    pub fn total_bits(&self) -> usize {
        self.words.len() * self.width as usize
    }

    pub fn remaining(&self) -> usize {
        self.total_bits() - self.pos
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    /// Reads `count ≤ 64` bits as a big-endian integer.
    pub fn read(&mut self, count: u32) -> Result<u64> {
        assert!(count <= 64);
        if (count as usize) > self.remaining() {
            return Err(Error::SeedUnderflow {
                needed: count as usize,
                available: self.remaining(),
                family: None,
            });
        }
        let width = self.width as usize;
        if count == 0 {
            return Ok(0);
        }
        let offset = self.pos % width;
        if offset + count as usize <= 2 * width {
            // the range touches at most two words
            let idx = self.pos / width;
            let hi = self.words[idx] as u128 & ((1u128 << width) - 1);
            let lo = self.words.get(idx + 1).map_or(0, |&w| w as u128 & ((1u128 << width) - 1));
            let window = (hi << width) | lo;
            let shift = 2 * width - offset - count as usize;
            self.pos += count as usize;
            return Ok((window >> shift) as u64 & low_mask(count));
        }
        let mut out: u64 = 0;
        let mut left = count as usize;
        while left > 0 {
            let word = self.words[self.pos / width];
            let offset = self.pos % width;
            let take = left.min(width - offset);
            // bits [offset, offset + take) of the word, counted from its top
            let shift = width - offset - take;
            let chunk = (word >> shift) & low_mask(take as u32);
            out = if take == 64 { chunk } else { (out << take) | chunk };
            self.pos += take;
            left -= take;
        }
        Ok(out)
    }
}

#[inline]
pub(crate) fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Reads `count ≤ 64` bits starting at bit `offset` of a byte string,
/// most-significant bit of each byte first.
pub fn read_bytes_be(bytes: &[u8], offset: usize, count: u32) -> Result<u64> {
    let end = offset + count as usize;
    if end > bytes.len() * 8 {
        return Err(Error::SeedUnderflow {
            needed: end,
            available: bytes.len() * 8,
            family: None,
        });
    }
    if count == 0 {
        return Ok(0);
    }
    // gather the (at most 9) bytes covering the range into a u128 window
    let first = offset / 8;
    let last = (end - 1) / 8;
    let mut window: u128 = 0;
    for &b in &bytes[first..=last] {
        window = (window << 8) | b as u128;
    }
    let trailing = (last + 1) * 8 - end;
    Ok(((window >> trailing) as u64) & low_mask(count))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_across_word_boundaries() {
        // two 4-bit words 0b1011, 0b0110 → stream 10110110
        let words = [0b1011, 0b0110];
        let mut r = BitReader::new(&words, 4);
        assert_eq!(r.read(3).unwrap(), 0b101);
        assert_eq!(r.read(3).unwrap(), 0b101);
        assert_eq!(r.read(2).unwrap(), 0b10);
        assert!(matches!(r.read(1), Err(Error::SeedUnderflow { .. })));
    }

    #[test]
    fn full_width_words() {
        let words = [u64::MAX, 0];
        let mut r = BitReader::new(&words, 64);
        assert_eq!(r.read(64).unwrap(), u64::MAX);
        assert_eq!(r.read(64).unwrap(), 0);
    }

    #[test]
    fn byte_reader() {
        let bytes = [0xA5, 0x0F];
        assert_eq!(read_bytes_be(&bytes, 0, 8).unwrap(), 0xA5);
        assert_eq!(read_bytes_be(&bytes, 4, 8).unwrap(), 0x50);
        assert_eq!(read_bytes_be(&bytes, 12, 4).unwrap(), 0xF);
        assert!(read_bytes_be(&bytes, 12, 5).is_err());
    }
}

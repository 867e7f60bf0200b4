//! Explicit step-indexed read-once branching programs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::CounterRng;

/// Upper bound on `W · 2^D · n` for exact expectation.
pub const MAX_ROBP_WORK: u64 = 1 << 26;

/// A program over `n` blocks of `D` bits with `states` memory states.
///
/// `transitions[step][state][block]` is the next state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RobpRepr", into = "RobpRepr")]
pub struct Robp {
    n: usize,
    d: u32,
    states: usize,
    start: usize,
    accept: Vec<bool>,
    transitions: Vec<Vec<Vec<usize>>>,
}

#[derive(Serialize, Deserialize)]
struct RobpRepr {
    n: usize,
    #[serde(rename = "D")]
    d: u32,
    states: usize,
    start: usize,
    accept: Vec<usize>,
    transitions: Vec<Vec<Vec<usize>>>,
}

impl TryFrom<RobpRepr> for Robp {
    type Error = Error;

    fn try_from(r: RobpRepr) -> Result<Self> {
        Robp::new(r.n, r.d, r.states, r.start, &r.accept, r.transitions)
    }
}

impl From<Robp> for RobpRepr {
    fn from(p: Robp) -> Self {
        RobpRepr {
            n: p.n,
            d: p.d,
            states: p.states,
            start: p.start,
            accept: p.accepting_states(),
            transitions: p.transitions,
        }
    }
}

impl Robp {
    pub fn new(
        n: usize,
        d: u32,
        states: usize,
        start: usize,
        accept: &[usize],
        transitions: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if n == 0 || states == 0 || !(1..=16).contains(&d) {
            return Err(invalid("program needs n ≥ 1, at least one state and 1 ≤ D ≤ 16"));
        }
        if start >= states {
            return Err(invalid(format!("start state {start} out of range")));
        }
        if transitions.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: transitions.len(),
            });
        }
        let fanout = 1usize << d;
        for (t, step) in transitions.iter().enumerate() {
            if step.len() != states {
                return Err(invalid(format!("step {t} has {} state rows, expected {states}", step.len())));
            }
            for row in step {
                if row.len() != fanout || row.iter().any(|&s| s >= states) {
                    return Err(invalid(format!("step {t}: transition row must list {fanout} valid states")));
                }
            }
        }
        let mut acc = vec![false; states];
        for &s in accept {
            if s >= states {
                return Err(invalid(format!("accepting state {s} out of range")));
            }
            acc[s] = true;
        }
        Ok(Self {
            n,
            d,
            states,
            start,
            accept: acc,
            transitions,
        })
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn block_bits(&self) -> u32 {
        self.d
    }

    pub fn width(&self) -> usize {
        self.states
    }

    pub fn accepting_states(&self) -> Vec<usize> {
        (0..self.states).filter(|&s| self.accept[s]).collect()
    }

    /// Whether the state count fits in `memory_bits` bits.
    pub fn fits_memory(&self, memory_bits: u32) -> bool {
        memory_bits >= 64 || (self.states as u64) <= 1u64 << memory_bits
    }

    /// Runs the program on exactly `n` blocks, each below `2^D`.
    pub fn run(&self, blocks: &[u64]) -> Result<bool> {
        if blocks.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: blocks.len(),
            });
        }
        if let Some(b) = blocks.iter().find(|&&b| b >> self.d != 0) {
            return Err(invalid(format!("block {b} exceeds {} bits", self.d)));
        }
        Ok(self.run_unchecked(blocks.iter().copied()))
    }

    #[inline]
    pub fn run_unchecked(&self, blocks: impl Iterator<Item = u64>) -> bool {
        let mut state = self.start;
        for (step, b) in self.transitions.iter().zip(blocks) {
            state = step[state][b as usize];
        }
        self.accept[state]
    }

    /// Exact acceptance probability under uniform blocks (forward DP).
    pub fn exact_expectation_uniform(&self) -> Result<f64> {
        let work = self.states as u64 * (1u64 << self.d) * self.n as u64;
        if work > MAX_ROBP_WORK {
            return Err(invalid(format!("W·2^D·n = {work} exceeds the budget {MAX_ROBP_WORK}")));
        }
        let p_block = 1.0 / (1u64 << self.d) as f64;
        let mut dist = vec![0.0; self.states];
        dist[self.start] = 1.0;
        let mut next = vec![0.0; self.states];
        for step in &self.transitions {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (s, row) in step.iter().enumerate() {
                let mass = dist[s];
                if mass == 0.0 {
                    continue;
                }
                for &t in row {
                    next[t] += mass * p_block;
                }
            }
            std::mem::swap(&mut dist, &mut next);
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::NumericFailure(format!("state distribution sums to {total}")));
            }
        }
        Ok((0..self.states).filter(|&s| self.accept[s]).map(|s| dist[s]).sum())
    }

    /// Accepts iff the XOR of all bits is 0. Two states.
    pub fn parity(n: usize, d: u32) -> Result<Self> {
        let fanout = 1usize << d;
        let step: Vec<Vec<usize>> = (0..2)
            .map(|s| (0..fanout).map(|b| s ^ (b.count_ones() as usize & 1)).collect())
            .collect();
        Self::new(n, d, 2, 0, &[0], vec![step; n])
    }

    /// Accepts iff the first block is 0. State 1 is an absorbing reject.
    pub fn first_block_zero(n: usize, d: u32) -> Result<Self> {
        let fanout = 1usize << d;
        let mut transitions = Vec::with_capacity(n);
        transitions.push(vec![(0..fanout).map(|b| usize::from(b != 0)).collect(), vec![1; fanout]]);
        for _ in 1..n {
            transitions.push(vec![vec![0; fanout], vec![1; fanout]]);
        }
        Self::new(n, d, 2, 0, &[0], transitions)
    }

    /// One-bit blocks; accepts iff at least `threshold` of them are 1.
    pub fn threshold_counter(n: usize, threshold: usize) -> Result<Self> {
        let states = n + 1;
        let step: Vec<Vec<usize>> = (0..states).map(|s| vec![s, (s + 1).min(n)]).collect();
        let accept: Vec<usize> = (threshold.min(states)..states).collect();
        Self::new(n, 1, states, 0, &accept, vec![step; n])
    }

    /// Uniformly random transitions and a random nonempty proper accepting set.
    pub fn random(n: usize, d: u32, states: usize, rng: &mut CounterRng) -> Result<Self> {
        let fanout = 1usize << d;
        let transitions = (0..n)
            .map(|_| {
                (0..states)
                    .map(|_| (0..fanout).map(|_| (rng.next_u64() % states as u64) as usize).collect())
                    .collect()
            })
            .collect();
        let mut accept: Vec<usize> = (0..states).filter(|_| rng.next_u64() & 1 == 1).collect();
        if accept.is_empty() {
            accept.push(0);
        }
        if accept.len() == states && states > 1 {
            accept.pop();
        }
        Self::new(n, d, states, 0, &accept, transitions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact expectation by enumerating every input.
    fn brute_force(p: &Robp) -> f64 {
        let total_bits = p.steps() as u32 * p.block_bits();
        assert!(total_bits <= 20);
        let mask = (1u64 << p.block_bits()) - 1;
        let mut accepted = 0u64;
        for word in 0..1u64 << total_bits {
            let blocks: Vec<u64> = (0..p.steps())
                .map(|t| (word >> (t as u32 * p.block_bits())) & mask)
                .collect();
            accepted += u64::from(p.run(&blocks).unwrap());
        }
        accepted as f64 / (1u64 << total_bits) as f64
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(Robp::parity(6, 2).unwrap().exact_expectation_uniform().unwrap(), 0.5);
        assert_eq!(Robp::first_block_zero(5, 2).unwrap().exact_expectation_uniform().unwrap(), 0.25);
        let t = Robp::threshold_counter(8, 4).unwrap();
        assert!((t.exact_expectation_uniform().unwrap() - 163.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn run_examples() {
        assert!(Robp::parity(4, 2).unwrap().run(&[0, 0, 0, 0]).unwrap());
        assert!(Robp::first_block_zero(3, 2).unwrap().run(&[0, 3, 1]).unwrap());
        let t = Robp::threshold_counter(8, 4).unwrap();
        assert!(t.run(&[1, 0, 1, 1, 0, 1, 0, 1]).unwrap());
        assert!(!t.run(&[1, 0, 0, 1, 0, 1, 0, 0]).unwrap());
    }

    #[test]
    fn run_validates_input() {
        let p = Robp::parity(4, 2).unwrap();
        assert!(matches!(p.run(&[0, 0]), Err(Error::DimensionMismatch { .. })));
        assert!(p.run(&[0, 0, 4, 0]).is_err());
    }

    #[test]
    fn dp_matches_enumeration() {
        let mut rng = CounterRng::new(17);
        for _ in 0..10 {
            let p = Robp::random(8, 2, 5, &mut rng).unwrap();
            let exact = p.exact_expectation_uniform().unwrap();
            assert!((exact - brute_force(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_enforced() {
        let p = Robp::parity(1 << 12, 16).unwrap();
        assert!(matches!(p.exact_expectation_uniform(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn json_format() {
        let p = Robp::first_block_zero(2, 1).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"n":2,"D":1,"states":2,"start":0,"accept":[0],"transitions":[[[0,1],[1,1]],[[0,0],[1,1]]]}"#
        );
        let back: Robp = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let broken = r#"{"n":2,"D":1,"states":2,"start":0,"accept":[0],"transitions":[[[0,2],[1,1]],[[0,0],[1,1]]]}"#;
        assert!(serde_json::from_str::<Robp>(broken).is_err());
    }

    #[test]
    fn memory_bound() {
        let p = Robp::threshold_counter(8, 4).unwrap();
        assert!(!p.fits_memory(3));
        assert!(p.fits_memory(4));
    }
}

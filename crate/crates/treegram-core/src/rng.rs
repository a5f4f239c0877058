//! Small deterministic pseudo-random generator for reproducible permutations.
//!
//! Evaluation runs must be replayable from a seed alone, across platforms and
//! implementations, so the generator is pinned to xorshift64* with the
//! standard constants (shifts 12/25/27, multiplier `0x2545F4914F6CDD1D`)
//! rather than left to a library default.

use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    /// Seed 0 would lock xorshift at 0 forever, so it is remapped to a fixed
    /// nonzero constant.
    pub fn new(seed: u64) -> Self {
        let state = if seed == 0 { 0x9E37_79B9_7F4A_7C15 } else { seed };
        Xorshift64Star { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform-ish value in `0..n` (plain modulo; the tiny modulo bias is
    /// irrelevant for shuffling and test-data generation).
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below(0)");
        self.next_u64() % n
    }
}

/// Fisher-Yates permutation of `0..n` driven by the seeded generator.
pub fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = Xorshift64Star::new(seed);
    let mut out: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        out.swap(i, j);
    }
    out
}

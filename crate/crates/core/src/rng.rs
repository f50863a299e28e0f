//! Seeded pseudo-random numbers shared by corpus splitting, embedding
//! initialization, parameter initialization and training shuffles.
//!
//! The generator is a plain 64-bit linear congruential generator so that the
//! exact stream can be reproduced in any language:
//!
//! ```text
//! state' = state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
//! ```
//!
//! `next_u64` advances the state and returns it. `next_f64` takes the top 53
//! bits of the next value and divides by 2^53, giving a value in `[0, 1)`.
//! The initial state is the seed itself.

/// Multiplier (Knuth, MMIX).
pub const LCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
/// Increment (Knuth, MMIX).
pub const LCG_INCREMENT: u64 = 1_442_695_040_888_963_407;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Lcg64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[-scale, scale)`.
    pub fn uniform(&mut self, scale: f64) -> f64 {
        (2.0 * self.next_f64() - 1.0) * scale
    }

    /// Integer in `0..bound` as the high word of `next_u64() * bound`, so the
    /// weak low bits of the generator never decide the result. `bound` must
    /// be > 0.
    pub fn below(&mut self, bound: usize) -> usize {
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle: for `i` from `len - 1` down to 1, swap `i` with
    /// `below(i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

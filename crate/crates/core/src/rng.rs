//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha with 8 rounds
//! (`rand_chacha::ChaCha8Rng`). The 256-bit key is expanded from the 64-bit
//! `seed` by `rand_core`'s `seed_from_u64` (a PCG32 output sequence), and the
//! 64-bit `stream` selects the ChaCha nonce, so distinct streams of the same
//! seed are independent keystreams. ChaCha is specified word-for-word, so the
//! same `(seed, stream)` yields identical output on every platform.
//!
//! Derived draws:
//! - bounded digit in `0..b`: `(x * b) >> 64` for a 64-bit word `x`
//!   (multiply-shift, no rejection; bias at most `b / 2^64`);
//! - uniform double in `[0, 1)`: `(x >> 11) * 2^-53`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::digits::DigitStream;

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64, stream: u64) -> Self {
        RngSpec { seed, stream }
    }

    /// Sub-stream for an indexed task (experiment cell, chain, replicate).
    /// The upper 32 bits of the stream id carry `group`, the lower 32 `index`.
    pub fn task(seed: u64, group: u32, index: u32) -> Self {
        RngSpec { seed, stream: (u64::from(group) << 32) | u64::from(index) }
    }
}

pub struct DigitRng {
    inner: ChaCha8Rng,
}

impl DigitRng {
    pub fn new(spec: RngSpec) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(spec.seed);
        inner.set_stream(spec.stream);
        DigitRng { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: u32) -> u32 {
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u32
    }

    /// Uniform double in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by Box-Muller (one of the pair is discarded).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// `m` i.i.d. uniform base-`b` digits.
    pub fn digit_stream(&mut self, base: u32, m: usize) -> DigitStream {
        let digits = (0..m).map(|_| self.below(base) as u8).collect();
        DigitStream::new(base, digits).expect("digits below base")
    }
}

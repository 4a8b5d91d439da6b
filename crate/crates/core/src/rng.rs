//! Counter-based uniform streams.
//!
//! Every draw is addressed by `(seed, stream, row, column)`: ChaCha's 64-bit
//! stream id carries `stream`, and the word position is derived from
//! `(row, column)`. Output therefore does not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Clamp range for uniforms fed to the normal quantile.
pub(crate) const UNIFORM_EPS: f64 = 1e-12;

#[derive(Clone)]
pub(crate) struct UniformStream {
    rng: ChaCha8Rng,
    width: usize,
}

impl UniformStream {
    pub(crate) fn new(seed: u64, stream: u64, width: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, width }
    }

    /// Fill `out` with the uniforms of `row`, clamped into `[eps, 1 - eps]`.
    pub(crate) fn row(&mut self, row: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.width);
        // Each f64 consumes two 32-bit words.
        self.rng
            .set_word_pos((row as u128) * (self.width as u128) * 2);
        for v in out.iter_mut() {
            let u: f64 = self.rng.random();
            *v = u.clamp(UNIFORM_EPS, 1.0 - UNIFORM_EPS);
        }
    }
}

/// Seeded generator for one logical task (bootstrap replicate, tie draw, ...).
pub(crate) fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mix a seed with a task index into a fresh seed.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    // SplitMix64 finaliser
    let mut z = seed
        ^ index
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

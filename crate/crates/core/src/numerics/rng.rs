//! Counted random streams.
//!
//! Every draw is addressed by `(seed, stream, counter)`, so adding draws to one
//! stream never shifts the values seen by another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default seed used whenever a configuration does not supply one.
pub const DEFAULT_SEED: u64 = 0x6d75_6c74_6961_7574;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    pub seed: u64,
    pub id: u64,
}

impl Stream {
    pub fn new(seed: u64, id: u64) -> Self {
        Stream { seed, id }
    }

    /// Derive a child stream; children of distinct labels never overlap.
    pub fn child(&self, label: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.id);
        rng.set_word_pos(u128::from(label.wrapping_mul(2)) + (1u128 << 64));
        Stream {
            seed: rng.random(),
            id: label,
        }
    }

    fn rng_at(&self, counter: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.id);
        rng.set_word_pos(u128::from(counter) * 4);
        rng
    }

    /// Uniform draw in [0, 1) addressed by `counter`.
    pub fn uniform(&self, counter: u64) -> f64 {
        self.rng_at(counter).random::<f64>()
    }

    /// Uniform draw in [lo, hi) addressed by `counter`.
    pub fn uniform_in(&self, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform(counter)
    }

    /// Fair coin addressed by `counter`, independent of `uniform(counter)`.
    pub fn coin(&self, counter: u64) -> bool {
        let mut rng = self.rng_at(counter);
        let _: u64 = rng.random();
        rng.random::<bool>()
    }
}

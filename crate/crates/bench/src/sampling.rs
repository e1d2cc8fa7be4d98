//! Reproducible uniform draws.
//!
//! The stream is ChaCha8 seeded with `seed_from_u64`; each double uses the top
//! 53 bits of one `next_u64` output, `u = (x >> 11) * 2^-53`, and
//! `U(a, b) = a + (b - a) u`. Any language with a ChaCha8 implementation can
//! regenerate the same instances.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct UniformSource(ChaCha8Rng);

impl UniformSource {
    pub fn new(seed: u64) -> Self {
        UniformSource(ChaCha8Rng::seed_from_u64(seed))
    }

    /// In `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.next_unit()
    }
}

/// `count` 2x2 matrices, entries drawn `a, b, c, d` from `U(1, 10)`.
pub fn random_matrices(count: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = UniformSource::new(seed);
    (0..count)
        .map(|_| std::array::from_fn(|_| rng.uniform(1.0, 10.0)))
        .collect()
}

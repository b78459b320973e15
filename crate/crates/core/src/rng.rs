//! Reproducible Gaussian noise.
//!
//! Every run owns one [`RngStream`], a ChaCha8 generator keyed by a 64-bit
//! seed and a 64-bit stream id. ChaCha is counter based, so a given
//! `(seed, stream_id)` pair yields the same sequence on every platform, and
//! distinct stream ids select non-overlapping keystreams.
//!
//! Schemes draw noise in a fixed order: step by step, and within a step
//! particle by particle (`n = 0..N`), each particle taking `q` consecutive
//! samples.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Position in the keystream, in 32-bit words.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Fills `out` with independent standard normal samples.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(&mut self.rng);
        }
    }

    /// `count x q` row-major array of i.i.d. `N(0, 1)` samples.
    ///
    /// # Panics
    /// If `count` or `q` is zero.
    pub fn gaussian_increments(&mut self, count: usize, q: usize) -> Vec<f64> {
        assert!(count >= 1 && q >= 1, "count and q must be positive");
        let mut out = vec![0.0; count * q];
        self.fill_standard_normal(&mut out);
        out
    }
}

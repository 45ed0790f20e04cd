//! Seeded random streams.
//!
//! A [`RandomStream`] is ChaCha8 (`rand_chacha`) keyed by
//! `ChaCha8Rng::seed_from_u64(seed)` with the ChaCha stream id set to a
//! partition index. `RandomStream::new(seed)` is partition 0, so a run split
//! into one partition draws exactly the same numbers as an unsplit run.
//! Uniform reals use the top 53 bits of one `u64`, which keeps every draw
//! bit-identical across platforms.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    partition: u64,
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> RandomStream {
        RandomStream::partition(seed, 0)
    }

    /// Independent stream for worker `partition` of a run seeded with `master`.
    pub fn partition(master: u64, partition: u64) -> RandomStream {
        let mut inner = ChaCha8Rng::seed_from_u64(master);
        inner.set_stream(partition);
        RandomStream { seed: master, partition, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn partition_index(&self) -> u64 {
        self.partition
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..8` from the top three bits of one draw.
    pub fn next_index8(&mut self) -> usize {
        (self.next_u64() >> 61) as usize
    }
}

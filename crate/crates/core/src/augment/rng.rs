use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Seeded pseudorandom stream used by every randomized effect.
///
/// The generator is ChaCha8 seeded through `rand_core`'s `seed_from_u64`
/// expansion; derived values (uniform floats, indices, shuffles) are computed
/// here from raw `u64` draws so they do not depend on `rand` version details.
/// Per-clip substreams are keyed by SHA-256 of the global seed and clip id,
/// which makes results independent of processing order.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    /// Identifier recorded in provenance so streams can be re-derived later.
    pub const ALGORITHM: &'static str = "chacha8-sha256-substream-v1";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Substream for one clip under a global seed.
    pub fn for_clip(global_seed: u64, clip_id: &str) -> Self {
        Self::new(substream_seed(global_seed, clip_id))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[min, max)`; returns exactly `min` when `min == max`.
    pub fn uniform_range(&mut self, min: f64, max: f64) -> f64 {
        let u = self.uniform();
        min + u * (max - min)
    }

    /// True with probability `p`. Always consumes one draw.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform index in `0..n`. `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() on empty range");
        // multiply-shift keeps the bias below 2^-64 * n
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// Independent child stream seeded from the next draw.
    pub fn fork(&mut self) -> SeededRng {
        SeededRng::new(self.next_u64())
    }
}

pub fn substream_seed(global_seed: u64, clip_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"vcrobust-substream-v1\0");
    h.update(global_seed.to_le_bytes());
    h.update(clip_id.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// A named, reproducible randomness source.
///
/// The same `(seed, stream)` pair always yields the same draw sequence.
/// Streams are cheap to derive, so every concurrent worker gets its own
/// and no generator is ever shared across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Derive a child stream. Distinct `offset`s give independent streams
    /// under the same seed.
    pub fn substream(&self, offset: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self
                .stream
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(offset.wrapping_add(1)),
        }
    }
}

/// Deterministic seed for evaluations keyed by parameter values: hashes the
/// bit patterns of `values` together with `base`. Used where an evaluator
/// must be reproducible given only the point it is asked to evaluate.
pub fn seed_from_values(base: u64, values: &[f64]) -> u64 {
    let mut h = base ^ 0x517c_c1b7_2722_0a95;
    for v in values {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x5bd1_e995_1d8a_f8a9);
        h ^= h >> 29;
    }
    h
}

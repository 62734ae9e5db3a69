//! Counter-based random streams.
//!
//! Every replication of an experiment gets its own ChaCha stream, addressed
//! by `(seed, index)`. The stream contents depend only on that pair, so a
//! replication produces the same draws whatever thread runs it and in
//! whatever order the replications are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// Factory for reproducible, independent per-replication streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream number `index`. Distinct indices never overlap.
    pub fn stream(&self, index: u64) -> StreamRng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

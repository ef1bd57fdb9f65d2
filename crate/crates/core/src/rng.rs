//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! `(seed, stream)` pair, so any experiment can be replayed exactly and
//! independent jobs never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        RngSeed { stream, ..self }
    }

    /// Derives a child seed; used to hand disjoint streams to sub-tasks.
    pub fn child(self, index: u64) -> Self {
        RngSeed {
            seed: self.seed,
            stream: self
                .stream
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(index.wrapping_add(1)),
        }
    }

    pub fn rng(self) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed::new(seed)
    }
}

//! Seed-addressed random streams.
//!
//! Every consumer of randomness in a run draws from its own ChaCha stream,
//! addressed by `(seed, stream id)`. Adding draws to one consumer never shifts
//! the values seen by another, which keeps runs replayable from the seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used inside the crate.
pub mod stream {
    pub const ARMS: u64 = 1;
    pub const DRAW: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const GENERATOR: u64 = 4;
    pub const BENCH: u64 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }

    /// Child streams for sub-tasks (e.g. one per benchmark repeat).
    pub fn child(&self, index: u64) -> SeedStreams {
        SeedStreams::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Deterministic splitting of one master seed into independent streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random streams consumed by a run. Each stream gets its own seed so that
/// changing how many numbers one consumer draws never perturbs another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    CrossValidation = 1,
    Platt = 2,
    Evolution = 3,
    GprRestarts = 4,
    MonteCarlo = 5,
    Sampling = 6,
    FinalEstimator = 7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSequence {
    master: u64,
}

impl SeedSequence {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Seed for `stream` at position `index` (e.g. the iteration number).
    pub fn derive(&self, stream: Stream, index: u64) -> u64 {
        let mut h = splitmix64(self.master ^ 0x6a09_e667_f3bc_c908);
        h = splitmix64(h ^ (stream as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        splitmix64(h ^ index)
    }

    pub fn rng(&self, stream: Stream, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(stream, index))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Seed handling.
//!
//! Every random choice in the crate flows from an explicit `u64` seed. A run
//! has one root seed; independent streams (per iteration, per rollout, per
//! batch) are derived with [`split_seed`], which mixes the parent seed and a
//! stream index through two rounds of SplitMix64. Each stream then drives its
//! own ChaCha8 generator, so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SearchRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `stream` from `parent`.
pub fn split_seed(parent: u64, stream: u64) -> u64 {
    splitmix64(parent ^ splitmix64(stream.wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> SearchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags used when splitting a root seed. Kept distinct so that e.g.
/// rollout seeds never collide with map-generation seeds.
pub(crate) mod stream {
    pub const ROLLOUT: u64 = 1;
    pub const MAP: u64 = 2;
    pub const TARGET: u64 = 3;
    pub const BATCH: u64 = 4;
}

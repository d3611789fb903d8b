//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit value. Independent sub-streams (multi-start runs, k-means restarts,
//! per-point gyre noise) get their seed from [`mix`], which applies the
//! SplitMix64 finalizer to the parent seed and the stream index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer (Stafford variant 13).
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for stream `index` of a parent `seed`.
///
/// `mix(seed, i) = splitmix64(seed + (i + 1) * GOLDEN_GAMMA)`, i.e. the
/// `i + 1`-th output of a SplitMix64 sequence started at `seed`.
pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Seeded randomness.
//!
//! All stochastic steps draw from SplitMix64 (`rand_xoshiro::SplitMix64`).
//! Independent streams are keyed by mixing a base seed with stream indices
//! through the SplitMix64 finalizer, so results never depend on evaluation
//! order.

use rand::SeedableRng;
pub use rand_xoshiro::SplitMix64;

/// Bumped whenever the sampling procedure changes in a way that alters output.
pub const GENERATOR_VERSION: u32 = 1;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a sequence of stream indices.
pub fn derive_seed(seed: u64, streams: &[u64]) -> u64 {
    streams.iter().fold(mix(seed), |acc, &s| {
        mix(acc ^ s.wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

pub fn seeded(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

pub fn stream(seed: u64, streams: &[u64]) -> SplitMix64 {
    seeded(derive_seed(seed, streams))
}

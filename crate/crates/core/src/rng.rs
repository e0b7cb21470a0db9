//! Seed derivation shared by every component that needs reproducible streams.
//!
//! All sub-seeds come from [`mix`], a SplitMix64 finaliser applied to the
//! parent seed combined with a stream label. Streams are therefore a pure
//! function of `(seed, label)` and never of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a stream label.
#[inline]
pub fn mix(seed: u64, label: u64) -> u64 {
    splitmix(seed ^ splitmix(label))
}

/// Same as [`mix`] for a 128-bit label.
#[inline]
pub fn mix128(seed: u64, label: u128) -> u64 {
    mix(mix(seed, label as u64), (label >> 64) as u64)
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

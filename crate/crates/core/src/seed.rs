//! Seed derivation.
//!
//! Every random stream in the crate is keyed by a master seed plus a
//! `(stream, index)` pair and mixed with SplitMix64. Work split across
//! threads therefore draws the same numbers as a sequential run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the subsystems that consume randomness.
pub mod stream {
    pub const MONTE_CARLO: u64 = 0x4d43;
    pub const MEAN_FIELD: u64 = 0x4d46;
    pub const EXPERIMENT: u64 = 0x4558;
    pub const RESTARTS: u64 = 0x5253;
    pub const NOISE: u64 = 0x4e53;
    pub const HAAR: u64 = 0x4852;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of item `index` in `stream` from `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)).wrapping_add(index))
}

/// A ChaCha8 generator for item `index` of `stream`.
pub fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

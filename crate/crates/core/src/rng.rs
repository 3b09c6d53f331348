//! Seeding. Every sampler takes an explicit 64-bit seed and draws from a
//! ChaCha8 stream, so equal seeds give bitwise-equal output on any platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `k` of a parent seed: `splitmix64(seed ^ k)`.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    splitmix64(seed ^ k)
}

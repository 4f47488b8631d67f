//! Seeded generators shared by every stochastic operation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout; portable and stable across platforms.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a root seed and a stream label.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    mix64(root ^ mix64(stream))
}

//! Seeded random number generation.
//!
//! All stochastic components draw from ChaCha20 (`rand_chacha::ChaCha20Rng`),
//! a counter-based stream cipher generator with a fixed, portable output
//! sequence. Child seeds are derived from a master seed with SplitMix64 so
//! that trial `i` of dimension `d` always sees the same stream regardless of
//! scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type GiboRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> GiboRng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of indices into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, p| splitmix64(acc ^ splitmix64(*p)))
}

//! Seed derivation and the seeded generator used wherever the crate needs
//! pseudo-randomness.
//!
//! All streams are ChaCha8 (`rand_chacha`) seeded through
//! [`SeedableRng::seed_from_u64`]. Sub-seeds are derived from a parent seed
//! and a list of integer coordinates with a splitmix64 cascade, so every job,
//! iteration and component gets an independent, reproducible stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the uniform generator, recorded in run metadata.
pub const GENERATOR_NAME: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64)";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One step of the splitmix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and an ordered list of coordinates.
pub fn derive_seed(parent: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(parent), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

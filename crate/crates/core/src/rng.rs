//! Deterministic seed derivation.
//!
//! Every stochastic step draws from a ChaCha stream whose seed is derived
//! from a master seed and a tuple of integer coordinates (epoch, batch, run,
//! cell indices). Parallel and serial schedules therefore see the same
//! streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with coordinates into a child seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0x6368_726f_6e6f_6c6d);
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

pub fn rng_from(master: u64, parts: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, parts))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

//! Seed derivation for reproducible, order-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The PRNG used everywhere in the crate. ChaCha streams are value-stable across
/// platforms and crate versions, which the byte-identical output contract needs.
pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer: a bijective 64-bit mixing function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from a parent seed and a stream label.
pub fn derive(parent: u64, label: u64) -> u64 {
    mix64(mix64(parent) ^ label.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// `split(master, size, trial)`: the per-trial seed used by ensemble runs.
pub fn split(master: u64, size: u64, trial: u64) -> u64 {
    derive(derive(master, size), trial)
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

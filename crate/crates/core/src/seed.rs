//! Seed derivation and RNG construction.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a `u64`.
//! Derived seeds come from a SplitMix64 chain over a tuple of integers:
//!
//! ```text
//! h = splitmix64(master)
//! for x in parts: h = splitmix64(h ^ x)
//! ```
//!
//! The chain is stable across platforms and releases, so a cell's seed
//! depends only on its coordinates and never on scheduling or on how many
//! other cells exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |h, &x| splitmix64(h ^ x))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An independent stream of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `round(fraction * total)` with halves rounded away from zero.
pub fn scaled_count(fraction: f64, total: usize) -> usize {
    (fraction * total as f64).round() as usize
}

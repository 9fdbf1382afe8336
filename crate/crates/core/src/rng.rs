//! Seedable, splittable random streams.
//!
//! Every randomized routine in the crate takes an explicit `&mut impl Rng`.
//! Independent streams for parallel work come from [`stream`], which selects
//! a ChaCha stream id under a fixed seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DispersionRng = ChaCha8Rng;

/// Generator for `seed`, stream 0.
pub fn seeded(seed: u64) -> DispersionRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for `seed` on an independent stream `id`.
pub fn stream(seed: u64, id: u64) -> DispersionRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

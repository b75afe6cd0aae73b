//! Seeded randomness.
//!
//! Every random draw in the crate flows from [`seeded`], so a run is fully
//! determined by its seed and the generator named in [`RNG_ALGORITHM`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every random draw; recorded in run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fixed offsets that derive component seeds from an experiment master seed.
pub mod offsets {
    pub const TOPOLOGY: u64 = 1;
    pub const DATA: u64 = 2;
    pub const INIT: u64 = 3;
}

pub fn derive(master: u64, offset: u64) -> u64 {
    master.wrapping_add(offset)
}

//! Seeded randomness shared by every stochastic step.

use rand::SeedableRng;

pub use rand_pcg::Pcg32;

/// Stream constructor used across the crate so a given seed always maps to
/// the same PCG32 state.
pub fn pcg32(seed: u64) -> Pcg32 {
    Pcg32::seed_from_u64(seed)
}

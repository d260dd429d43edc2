//! Seed derivation and the pinned pseudo-random generator.
//!
//! All randomness flows from ChaCha8 (`rand_chacha` 0.3.1, pinned in the
//! manifest). Sub-seeds are derived with SplitMix64 so that each graph,
//! solver ordering and experiment cell gets an independent stream that is a
//! pure function of the master seed and the cell coordinates.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// The generator used everywhere in the simulator.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a master seed and a path of coordinates.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &part| splitmix64(acc ^ splitmix64(part)))
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn uniform01<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..bound` (multiply-high reduction).
pub fn uniform_index<R: RngCore>(rng: &mut R, bound: usize) -> usize {
    debug_assert!(bound > 0);
    ((rng.next_u64() as u128 * bound as u128) >> 64) as usize
}

/// Exponential draw with the given mean, by inversion.
pub fn exponential<R: RngCore>(rng: &mut R, mean: f64) -> f64 {
    // 1 - u lies in (0, 1], so the logarithm is finite.
    -libm::log(1.0 - uniform01(rng)) * mean
}

//! Counter-based seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a seed
//! derived here, so results depend only on `(base seed, job coordinates)` and
//! never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a base seed together with an ordered list of coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = mix64(base.wrapping_add(GOLDEN));
    for &p in parts {
        h = mix64(h ^ mix64(p.wrapping_add(GOLDEN)));
    }
    h
}

pub fn rng_from(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, parts))
}

/// Stage tags so that stages sharing a sample seed draw from disjoint streams.
pub(crate) mod stage {
    pub const TRANSFORM: u64 = 1;
    pub const INTENSITY: u64 = 2;
    pub const BIAS: u64 = 3;
    pub const RESOLUTION: u64 = 4;
    pub const GAMMA: u64 = 5;
    pub const LABEL_PARAMS: u64 = 6;
    pub const SHUFFLE: u64 = 7;
    pub const SAMPLE: u64 = 8;
    pub const FIT: u64 = 9;
}

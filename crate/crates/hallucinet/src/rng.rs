//! Deterministic seed derivation and RNG construction.
//!
//! Every random decision in the crate flows from a 64-bit master seed through
//! the splitting rule below, so regenerating with the same seed and config is
//! bit-identical across runs and platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splitting rule: stream `i` of master seed `m` is
/// `splitmix64(splitmix64(m ^ (i+1)·GOLDEN))`. Distinct streams of the same
/// master are independent for all practical purposes and stable forever.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(
        master ^ stream.wrapping_add(1).wrapping_mul(GOLDEN),
    ))
}

/// The crate-wide RNG. ChaCha8 keyed from a u64 is reproducible across
/// platforms and rand releases that keep the seeding scheme.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mask a derived seed into the range TOML integers can represent. Seeds
/// that end up in TOML-serialized configs must pass through this.
pub fn toml_safe_seed(seed: u64) -> u64 {
    seed & (i64::MAX as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_seed_is_stable_and_stream_sensitive() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 0);
        assert_eq!(a, b);
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
    }

    #[test]
    fn rng_streams_reproduce() {
        let mut r1 = rng_from_seed(derive_seed(7, 3));
        let mut r2 = rng_from_seed(derive_seed(7, 3));
        for _ in 0..16 {
            assert_eq!(r1.gen::<u64>(), r2.gen::<u64>());
        }
    }
}

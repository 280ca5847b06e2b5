//! Seed derivation for per-stream deterministic RNGs.
//!
//! Every random draw in an experiment comes from a `ChaCha8Rng` seeded by
//! `derive_seed(master, &[stream parts...])`. Parallel and serial execution
//! therefore produce identical results: each (client, iteration) stream is a
//! pure function of the master seed, never of scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep unrelated draws (data generation, init, batching, ...)
/// on distinct substreams even when the remaining parts coincide.
pub mod stream {
    pub const PUBLIC_DATA: u64 = 0x01;
    pub const POOL_DATA: u64 = 0x02;
    pub const SHARD_DRAW: u64 = 0x03;
    pub const MODEL_INIT: u64 = 0x04;
    pub const TRAIN_BATCHES: u64 = 0x05;
}

/// SplitMix64 finalizer. Fixed published constants; stable across platforms.
fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed with an ordered list of stream parts into a new seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

/// The experiment-wide RNG: ChaCha8, seeded from a derived seed.
pub fn rng_for(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_seed_is_stable() {
        // Frozen values: the derivation must never change between runs or
        // releases, or every recorded experiment becomes irreproducible.
        assert_eq!(derive_seed(0, &[]), 16294208416658607535);
        assert_eq!(
            derive_seed(7, &[stream::MODEL_INIT, 2, 11]),
            derive_seed(7, &[stream::MODEL_INIT, 2, 11])
        );
    }

    #[test]
    fn different_parts_give_different_streams() {
        let a = derive_seed(7, &[stream::MODEL_INIT, 0, 1]);
        let b = derive_seed(7, &[stream::MODEL_INIT, 1, 0]);
        let c = derive_seed(7, &[stream::TRAIN_BATCHES, 0, 1]);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rng_streams_are_reproducible() {
        let mut r1 = rng_for(42, &[stream::POOL_DATA, 3]);
        let mut r2 = rng_for(42, &[stream::POOL_DATA, 3]);
        let x1: [u64; 4] = core::array::from_fn(|_| r1.random());
        let x2: [u64; 4] = core::array::from_fn(|_| r2.random());
        assert_eq!(x1, x2);
    }
}

//! Reproducible random streams.
//!
//! Every parallel unit of work (a replicate chain, a bootstrap resample, a
//! permutation) owns a stream derived from the master seed and its index, so
//! results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `seed`: the seed XOR the hashed index, hashed again.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

pub fn stream(seed: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(seed, index))
}

/// Derives a named sub-seed, e.g. one per experiment inside a suite.
pub fn subseed(seed: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(mix64(seed), |acc, b| mix64(acc ^ u64::from(b)))
}

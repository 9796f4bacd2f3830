//! Seeding helpers.
//!
//! Every random draw in the crate comes from a ChaCha8 generator created by
//! [`stream_rng`]. A single replicate seed feeds several independent streams:
//! [`MODEL_STREAM`] for the ground-truth model and [`ADJACENCY_STREAM`] for the
//! Bernoulli edge draws, so resampling edges never perturbs the model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used by `generator::sample_model`.
pub const MODEL_STREAM: u64 = 0;
/// Stream used by `generator::sample_adjacency`.
pub const ADJACENCY_STREAM: u64 = 1;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a tag. Distinct tags give unrelated seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019)))
}

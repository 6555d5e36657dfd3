//! Seed derivation and per-run PRNG substreams.
//!
//! A run seed is derived from `(master_seed, seed_index)`; the relaxation
//! stream and the gradient-noise stream are ChaCha substreams 0 and 1 of that
//! seed, so λ draws never consume noise draws and vice versa.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const LAMBDA_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;

/// SplitMix64 finalizer over the pair.
pub fn derive_seed(master_seed: u64, seed_index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(seed_index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(run_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct RunStreams {
    pub lambda: StreamRng,
    pub noise: StreamRng,
}

impl RunStreams {
    pub fn new(run_seed: u64) -> Self {
        Self {
            lambda: substream(run_seed, LAMBDA_STREAM),
            noise: substream(run_seed, NOISE_STREAM),
        }
    }
}

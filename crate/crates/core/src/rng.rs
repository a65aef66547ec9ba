//! Counter-based RNG streams so per-agent randomness does not depend on
//! how agents are split across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a list of counters into a single 64-bit key.
pub fn derive_key(seed: u64, counters: &[u64]) -> u64 {
    counters
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Independent stream for `(seed, purpose, step, agent)`.
#[inline]
pub fn stream(seed: u64, purpose: u64, step: u64, agent: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, &[purpose, step, agent]))
}

pub mod purpose {
    pub const DYNAMICS: u64 = 1;
    pub const ASYNC_SCHEDULE: u64 = 2;
    pub const GENERATOR: u64 = 3;
    pub const SUBSCRIPTIONS: u64 = 4;
    pub const OBSERVER_NOISE: u64 = 5;
    pub const EXPERIMENT: u64 = 6;
}

//! Deterministic derivation of independent RNG streams.
//!
//! Every stochastic task (a window fit, a bootstrap replicate, a synthetic
//! snapshot) draws from a stream derived from the user seed plus the task's
//! coordinates. Outputs therefore depend only on the seed and the task
//! indices, never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse a base seed and a path of task coordinates into one sub-seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(seed ^ 0xa076_1d64_78bd_642f);
    for &part in path {
        state = splitmix64(state ^ splitmix64(part));
    }
    state
}

/// Derive an RNG stream from a base seed and a path of task coordinates.
pub fn derive_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

/// Namespace tags separating the major stream families.
pub mod domain {
    pub const FIT: u64 = 1;
    pub const BOOT: u64 = 2;
    pub const SYNTH: u64 = 3;
    pub const SWEEP: u64 = 4;
}

//! Sub-seed derivation for independent, reorderable random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of child stream `index` under `parent`.
///
/// Each level mixes the parent first so that `derive(derive(s, a), b)` and
/// `derive(derive(s, b), a)` differ.
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index.wrapping_mul(GOLDEN_GAMMA))
}

pub fn rng_from(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for run `run` of an experiment with master seed `master`.
pub fn run_seed(master: u64, run: u64) -> u64 {
    derive(master, run)
}

/// Environment stream of a run (deployment, alarms, channels, pilots, noise).
pub fn env_stream(run_seed: u64) -> SimRng {
    rng_from(derive(run_seed, 0))
}

/// Private stream of the agent living on device `device`.
pub fn agent_stream(run_seed: u64, device: usize) -> SimRng {
    rng_from(derive(run_seed, 1 + device as u64))
}

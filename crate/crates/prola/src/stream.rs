//! Seed derivation for reproducible experiments.
//!
//! All randomness flows through ChaCha8, a counter-based generator with
//! 2^64 independent streams. A replication's seed is
//! `base_seed + replication_index` (wrapping), and within a replication
//! the policy and the environment draw from separate streams of the same
//! seed, so changing one side's parameters never perturbs the other's
//! realized draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id for policy-side sampling (arm draws).
pub const POLICY_STREAM: u64 = 0;
/// Stream id for environment-side sampling (reward draws).
pub const ENV_STREAM: u64 = 1;

/// Seed of replication `replication` under `base_seed`.
pub fn replication_seed(base_seed: u64, replication: u64) -> u64 {
    base_seed.wrapping_add(replication)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The policy's generator for one replication.
pub fn policy_rng(base_seed: u64, replication: u64) -> ChaCha8Rng {
    stream_rng(replication_seed(base_seed, replication), POLICY_STREAM)
}

/// The environment's generator for one replication.
pub fn env_rng(base_seed: u64, replication: u64) -> ChaCha8Rng {
    stream_rng(replication_seed(base_seed, replication), ENV_STREAM)
}

//! Independent random streams derived from one replication seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reward draws of the environment.
pub const ENV_STREAM: u64 = 0;
/// Randomized choices of a centralized policy.
pub const POLICY_STREAM: u64 = 1;
/// Agent `i` of a decentralized run uses stream `AGENT_STREAM_BASE + i`.
pub const AGENT_STREAM_BASE: u64 = 2;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

//! Keyed random streams.
//!
//! Every random decision draws from a stream identified by the scenario seed,
//! the acting account, the job and the purpose of the draw. Streams do not
//! depend on scheduling, so replays and parallel sweeps reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ledger::types::JobId;
use crate::registry::AccountId;

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Provider's execute-or-forge choice.
    Decide,
    /// Running the job (provider or one mediator replica run).
    Execute,
    /// Contents of a forged result.
    Forge,
    /// Creator's ignore, verify and detection draws.
    React,
    /// Mediator replica executions.
    Mediate,
    /// Whether the agent fails to respond to this job.
    Unresponsive,
}

/// SplitMix64 finaliser.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_id(agent: AccountId, job: JobId, purpose: Purpose) -> u64 {
    let who = ((agent.role as u64) << 32) | agent.index as u64;
    mix(mix(who, job.0), purpose as u64)
}

pub fn stream(seed: u64, agent: AccountId, job: JobId, purpose: Purpose) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(agent, job, purpose));
    rng
}

/// `true` with probability `p`; `p <= 0` never and `p >= 1` always.
pub fn bernoulli(rng: &mut Stream, p: f64) -> bool {
    use rand::Rng;
    rng.gen::<f64>() < p
}

//! Strategy-driven creators, providers and mediators.

pub mod account;
pub mod behavior;
pub mod job;
pub mod rng;

pub use account::PrivateAccount;
pub use behavior::{
    jc_react, mediate, rp_act, unresponsive, JcDecision, JcStrategy, Reaction, RpCosts, RpOutput,
    RpStrategy,
};
pub use job::{execute_job, Execution, JobSpec, ResultKind};
pub use rng::{mix, stream, Purpose, Stream};

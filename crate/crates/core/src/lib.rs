//! Simulation and analysis library for a mediated computation-outsourcing
//! market.
//!
//! * [`ledger`] is the contract state machine: offers, escrow, matching,
//!   results, mediation and settlement.
//! * [`matching`] holds the feasibility predicate and the solver.
//! * [`game`] evaluates the extensive-form game in closed form.
//! * [`agents`] drives the protocol with strategy-following participants.
//! * [`sim`] runs seeded scenarios and parameter sweeps.

pub mod agents;
pub mod game;
pub mod ledger;
pub mod matching;
pub mod money;
pub mod registry;
pub mod sim;

pub use money::Money;
pub use registry::{AccountId, Role};

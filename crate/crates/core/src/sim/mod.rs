//! Deterministic discrete-event harness around the ledger.

pub mod clock;
pub mod config;
pub mod metrics;
pub mod runner;
pub mod sweep;

use thiserror::Error;

pub use clock::{BlockClock, PendingCall};
pub use config::{JobCreatorConfig, MediatorConfig, ResourceProviderConfig, ScenarioConfig};
pub use metrics::{AgentMetrics, Metrics, PairRewards, RunningStat};
pub use runner::{run_scenario, RunOutput};
pub use sweep::{apply_assignments, sweep, sweep_sequential, GridAxis, SweepTable};

use crate::ledger::LedgerError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    ConfigInvalid(String),
    #[error("unknown field: {0}")]
    UnknownField(String),
    #[error("malformed grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

impl SimError {
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::ConfigInvalid(_) => "ConfigInvalid",
            SimError::UnknownField(_) => "UnknownField",
            SimError::Grid(_) => "Grid",
            SimError::Ledger(_) => "Ledger",
        }
    }
}

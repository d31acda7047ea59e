//! Closed-form analysis of the outsourcing game.
//!
//! The provider executes (`E`) or deceives (`D`); the creator verifies (`V`)
//! or passes (`P`). A verified anomalous or forged result goes to a mediator
//! that replicates the job `n` times. Utilities are reals in one currency
//! unit, independent of the ledger's integer money.

pub mod equilibrium;
pub mod legacy;
pub mod params;
pub mod tree;
pub mod utility;

use thiserror::Error;

pub use equilibrium::{
    derivative_curve, equilibrium_pe, equilibrium_pv, jc_total_utility, jc_utility_derivative_pa,
    min_optimal_pa, optimal_pa, CurvePoint, Mixing, StationaryInputs,
};
pub use legacy::{
    honest_is_best_response, legacy_honest_equilibrium, legacy_utilities, LegacyAction,
    LegacyEquilibrium, LegacyParams, LegacyTable,
};
pub use params::{Constraint, GameInputs, GameParams, GameParamsFile};
pub use tree::{
    branches, outcome_distribution, outcome_reward, payoff_row, tree_expectation, JcAction,
    Outcome, PayoffRow, Player, RpAction,
};
pub use utility::{
    classify_jc_type, expected_utilities, jc_utilities, rp_execute_condition, rp_utilities,
    simplified_dominance, verify_gain, Dominance, JcType, RpExecuteCondition, UtilityTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("p_a must be positive")]
    ZeroProbability,
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("stationarity condition has no root in (0, 1)")]
    NoRootInUnitInterval,
    #[error("simplified tables need pi_d = pi_c and d = pi_c * (theta + n)")]
    NotTableConvention,
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

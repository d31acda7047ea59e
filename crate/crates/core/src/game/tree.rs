use std::fmt;

use serde::{Deserialize, Serialize};

use super::params::GameParams;
use crate::ledger::types::Party;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RpAction {
    Execute,
    Deceive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JcAction {
    Verify,
    Pass,
}

/// Who a payoff row is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    Rp,
    Jc,
    Mediator,
}

/// Leaves of the game tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    /// Forged result, verified, mediator saw an anomaly: creator faulted.
    O1,
    /// Forged result, verified, mediator agreed on the normal result.
    O2,
    /// Forged result accepted unverified.
    O3,
    /// Executed result accepted unverified.
    O4,
    /// Executed, verified, normal result accepted.
    O5,
    /// Executed, verified, anomalous result rejected, creator faulted.
    O6,
    /// Executed, verified, anomalous result rejected, provider faulted.
    O7,
}

impl Outcome {
    pub const ALL: [Outcome; 7] = [
        Outcome::O1,
        Outcome::O2,
        Outcome::O3,
        Outcome::O4,
        Outcome::O5,
        Outcome::O6,
        Outcome::O7,
    ];

    pub fn rp_action(self) -> RpAction {
        match self {
            Outcome::O1 | Outcome::O2 | Outcome::O3 => RpAction::Deceive,
            _ => RpAction::Execute,
        }
    }

    pub fn jc_action(self) -> JcAction {
        match self {
            Outcome::O3 | Outcome::O4 => JcAction::Pass,
            _ => JcAction::Verify,
        }
    }

    pub fn mediated(self) -> bool {
        self.faulted().is_some()
    }

    pub fn faulted(self) -> Option<Party> {
        match self {
            Outcome::O1 | Outcome::O6 => Some(Party::JobCreator),
            Outcome::O2 | Outcome::O7 => Some(Party::ResourceProvider),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffRow {
    pub outcome: Outcome,
    pub player: Player,
    pub contract_payoff: f64,
    pub self_benefit: f64,
    pub reward: f64,
}

/// Payoff split for one leaf: what the contract pays and what the player
/// gains or spends privately.
pub fn payoff_row(outcome: Outcome, player: Player, p: &GameParams) -> PayoffRow {
    use Outcome::*;
    let (contract, own) = match player {
        Player::Rp => {
            let own = match outcome.rp_action() {
                RpAction::Execute => -p.c_e,
                RpAction::Deceive => -p.c_d,
            };
            let contract = match outcome {
                O1 | O6 => p.pi_d - p.g_r - p.pi_a,
                O2 | O7 => -p.d - p.g_r - p.pi_a,
                O3 | O4 | O5 => p.pi_c - p.g_r - p.pi_a,
            };
            (contract, own)
        }
        Player::Jc => {
            let mut own = 0.0;
            if outcome.rp_action() == RpAction::Execute {
                own += p.b;
            }
            if outcome.jc_action() == JcAction::Verify {
                own -= p.c_v;
            }
            let contract = match outcome {
                O1 | O6 => -p.g_j - p.d - p.g_m - p.pi_a,
                O2 | O7 => p.pi_d - p.g_j - p.g_m - p.pi_a,
                O3 | O4 | O5 => -p.g_j - p.pi_c - p.pi_a,
            };
            (contract, own)
        }
        Player::Mediator => {
            let contract = if outcome.mediated() {
                p.pi_a + p.pi_m
            } else {
                p.pi_a
            };
            (contract, 0.0)
        }
    };
    PayoffRow {
        outcome,
        player,
        contract_payoff: contract,
        self_benefit: own,
        reward: contract + own,
    }
}

pub fn outcome_reward(outcome: Outcome, player: Player, p: &GameParams) -> f64 {
    payoff_row(outcome, player, p).reward
}

/// Leaves reachable under an action pair with their probabilities.
pub fn branches(rp: RpAction, jc: JcAction, p: &GameParams) -> Vec<(Outcome, f64)> {
    let q = p.q();
    match (rp, jc) {
        (RpAction::Deceive, JcAction::Verify) => vec![(Outcome::O1, 1.0 - q), (Outcome::O2, q)],
        (RpAction::Deceive, JcAction::Pass) => vec![(Outcome::O3, 1.0)],
        (RpAction::Execute, JcAction::Pass) => vec![(Outcome::O4, 1.0)],
        (RpAction::Execute, JcAction::Verify) => vec![
            (Outcome::O5, p.p_a),
            (Outcome::O6, (1.0 - p.p_a) * (1.0 - q)),
            (Outcome::O7, (1.0 - p.p_a) * q),
        ],
    }
}

/// Probability of each leaf when both players mix with `p_e` and `p_v`.
pub fn outcome_distribution(p: &GameParams) -> [f64; 7] {
    let mut dist = [0.0; 7];
    for (rp, w_rp) in [(RpAction::Execute, p.p_e), (RpAction::Deceive, 1.0 - p.p_e)] {
        for (jc, w_jc) in [(JcAction::Verify, p.p_v), (JcAction::Pass, 1.0 - p.p_v)] {
            for (o, w) in branches(rp, jc, p) {
                dist[o.index()] += w_rp * w_jc * w;
            }
        }
    }
    dist
}

/// Expected reward of an action pair by walking the tree.
pub fn tree_expectation(rp: RpAction, jc: JcAction, player: Player, p: &GameParams) -> f64 {
    branches(rp, jc, p)
        .into_iter()
        .map(|(o, w)| w * outcome_reward(o, player, p))
        .sum()
}

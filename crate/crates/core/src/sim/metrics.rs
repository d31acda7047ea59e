use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::game::{JcAction, Outcome, RpAction};
use crate::money::Money;
use crate::registry::AccountId;

/// Welford mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStat {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Per-job rewards (contract delta plus private part, in currency units)
/// for one realized action pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairRewards {
    pub jc: RunningStat,
    pub rp: RunningStat,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub ledger_delta: Money,
    pub private_total: Money,
    pub utility: Money,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub seed: u64,
    /// Job offers that reached the ledger.
    pub jobs: u64,
    pub rounds_aborted: u64,
    pub matches: u64,
    pub closed: u64,
    pub timed_out: u64,
    pub canceled: u64,
    pub mediations: u64,
    pub results: u64,
    pub verifications: u64,
    pub outcomes: [u64; 7],
    /// Closed jobs outside the seven leaves, e.g. an undetected forgery.
    pub other_outcomes: u64,
    pub failed_calls: u64,
    pub failures: BTreeMap<String, u64>,
    pub agents: BTreeMap<AccountId, AgentMetrics>,
    pub rewards: BTreeMap<(RpAction, JcAction), PairRewards>,
    pub conservation_residual: i128,
    /// Block boundaries at which the residual was nonzero.
    pub residual_violations: u64,
    pub blocks: u64,
    pub stalled: bool,
}

fn pair_name(rp: RpAction, jc: JcAction) -> &'static str {
    match (rp, jc) {
        (RpAction::Execute, JcAction::Verify) => "ev",
        (RpAction::Execute, JcAction::Pass) => "ep",
        (RpAction::Deceive, JcAction::Verify) => "dv",
        (RpAction::Deceive, JcAction::Pass) => "dp",
    }
}

impl Metrics {
    pub fn outcome(&self, o: Outcome) -> u64 {
        self.outcomes[o.index()]
    }

    pub fn mediation_rate(&self) -> f64 {
        ratio(self.mediations, self.jobs)
    }

    pub fn verification_rate(&self) -> f64 {
        ratio(self.verifications, self.results)
    }

    /// `key=value` lines in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(s, "{k}={v}").expect("string write");
        };
        kv("seed", &self.seed);
        kv("jobs", &self.jobs);
        kv("rounds_aborted", &self.rounds_aborted);
        kv("matches", &self.matches);
        kv("closed", &self.closed);
        kv("timed_out", &self.timed_out);
        kv("canceled", &self.canceled);
        kv("mediations", &self.mediations);
        kv("mediation_rate", &self.mediation_rate());
        kv("results", &self.results);
        kv("verifications", &self.verifications);
        kv("verification_rate", &self.verification_rate());
        for o in Outcome::ALL {
            kv(&format!("outcome.{o}"), &self.outcome(o));
        }
        kv("outcome.other", &self.other_outcomes);
        kv("failed_calls", &self.failed_calls);
        for (kind, n) in &self.failures {
            kv(&format!("failed.{kind}"), n);
        }
        kv("conservation_residual", &self.conservation_residual);
        kv("residual_violations", &self.residual_violations);
        kv("blocks", &self.blocks);
        kv("stalled", &self.stalled);
        for (id, a) in &self.agents {
            kv(
                &format!("agent.{id}.ledger_delta"),
                &a.ledger_delta.amount(),
            );
            kv(
                &format!("agent.{id}.private_total"),
                &a.private_total.amount(),
            );
            kv(&format!("agent.{id}.utility"), &a.utility.amount());
        }
        for ((rp, jc), r) in &self.rewards {
            let p = pair_name(*rp, *jc);
            kv(&format!("reward.{p}.count"), &r.jc.count);
            kv(&format!("reward.{p}.jc_mean"), &r.jc.mean);
            kv(&format!("reward.{p}.jc_se"), &r.jc.std_error());
            kv(&format!("reward.{p}.rp_mean"), &r.rp.mean);
            kv(&format!("reward.{p}.rp_se"), &r.rp.std_error());
        }
        s
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

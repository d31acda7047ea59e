//! Scenario files.
//!
//! Amounts are integer micro-units and times are simulated milliseconds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::agents::mix;
use crate::game::GameParams;
use crate::ledger::types::{
    priced_usage, JobId, JobOffer, Millis, ResourceOffer, ResourceOfferId, ResourceVector,
};
use crate::ledger::{Compensation, PlatformParams};
use crate::matching::SolverMode;
use crate::money::Money;
use crate::registry::{
    AccountId, Architecture, DirectoryId, JobCreatorProfile, MediatorProfile,
    ResourceProviderProfile, DEFAULT_TIME_PER_INSTRUCTION_US,
};

fn one() -> f64 {
    1.0
}

fn default_block_interval() -> Millis {
    10_000
}

fn default_deadline() -> Millis {
    600_000
}

fn default_directories() -> Vec<u32> {
    vec![0]
}

fn default_tpi() -> u64 {
    DEFAULT_TIME_PER_INSTRUCTION_US
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Total job rounds across all creators.
    pub job_count: u64,
    #[serde(default = "default_block_interval")]
    pub block_interval_ms: Millis,
    #[serde(default)]
    pub solver_mode: SolverMode,
    /// Stop after this many blocks and flag the run as stalled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_blocks: Option<u64>,
    #[serde(default)]
    pub platform: PlatformParams,
    pub job_creators: Vec<JobCreatorConfig>,
    pub resource_providers: Vec<ResourceProviderConfig>,
    pub mediators: Vec<MediatorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobCreatorConfig {
    pub balance: Money,
    #[serde(default = "one")]
    pub p_a: f64,
    #[serde(default)]
    pub p_v: f64,
    #[serde(default)]
    pub reject_on_anomaly: bool,
    #[serde(default)]
    pub p_ignore: f64,
    #[serde(default = "one")]
    pub detection_probability: f64,
    /// Private benefit of an executed job (b).
    #[serde(default)]
    pub benefit: Money,
    /// Private cost of one verification (c_v).
    #[serde(default)]
    pub verification_cost: Money,
    pub limits: ResourceVector,
    /// Resources a run actually consumes; defaults to the limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<ResourceVector>,
    pub instruction_max_price: Money,
    pub bandwidth_max_price: Money,
    #[serde(default)]
    pub match_incentive: Money,
    /// Deposited on top of the minimum.
    #[serde(default)]
    pub deposit_extra: Money,
    /// Completion deadline relative to posting.
    #[serde(default = "default_deadline")]
    pub deadline_ms: Millis,
    #[serde(default)]
    pub arch: Architecture,
    #[serde(default)]
    pub directory: u32,
    /// Mediator indices; every mediator when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trusted_mediators: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceProviderConfig {
    pub balance: Money,
    #[serde(default = "one")]
    pub p_e: f64,
    #[serde(default)]
    pub forge_seed: u64,
    /// Probability of never answering a matched job.
    #[serde(default)]
    pub p_unresponsive: f64,
    /// c_e
    #[serde(default)]
    pub execution_cost: Money,
    /// c_d
    #[serde(default)]
    pub deception_cost: Money,
    pub capacities: ResourceVector,
    pub instruction_price: Money,
    pub bandwidth_price: Money,
    #[serde(default)]
    pub match_incentive: Money,
    #[serde(default)]
    pub deposit_extra: Money,
    #[serde(default = "default_tpi")]
    pub time_per_instruction_us: u64,
    #[serde(default)]
    pub arch: Architecture,
    #[serde(default = "default_directories")]
    pub trusted_directories: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trusted_mediators: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediatorConfig {
    #[serde(default)]
    pub balance: Money,
    #[serde(default)]
    pub arch: Architecture,
    #[serde(default = "default_directories")]
    pub trusted_directories: Vec<u32>,
    #[serde(default)]
    pub p_unresponsive: f64,
}

impl JobCreatorConfig {
    pub fn usage(&self) -> ResourceVector {
        self.usage.unwrap_or(self.limits)
    }
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::ConfigInvalid(msg.into())
}

fn check_probability(name: &str, owner: &str, p: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{owner}: {name} = {p} is outside [0, 1]")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig, SimError> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| invalid(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.platform
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if self.block_interval_ms == 0 {
            return Err(invalid("block_interval_ms must be positive"));
        }
        if self.platform.reaction_window_ms < self.block_interval_ms {
            return Err(invalid(
                "reaction_window_ms must be at least one block interval",
            ));
        }
        if self.job_creators.is_empty()
            || self.resource_providers.is_empty()
            || self.mediators.is_empty()
        {
            return Err(invalid(
                "need at least one job creator, resource provider and mediator",
            ));
        }
        let mediators = self.mediators.len() as u32;
        let check_trust = |owner: &str, t: &Option<Vec<u32>>| match t {
            Some(list) if list.iter().any(|&m| m >= mediators) => Err(invalid(format!(
                "{owner}: trusted mediator index out of range"
            ))),
            _ => Ok(()),
        };
        for (i, jc) in self.job_creators.iter().enumerate() {
            let owner = format!("job_creators[{i}]");
            check_probability("p_a", &owner, jc.p_a)?;
            check_probability("p_v", &owner, jc.p_v)?;
            check_probability("p_ignore", &owner, jc.p_ignore)?;
            check_probability("detection_probability", &owner, jc.detection_probability)?;
            check_trust(&owner, &jc.trusted_mediators)?;
            let u = jc.usage();
            if u.instructions > jc.limits.instructions || u.bandwidth > jc.limits.bandwidth {
                return Err(invalid(format!("{owner}: usage exceeds limits")));
            }
            if jc.balance.is_negative() || jc.benefit.is_negative() {
                return Err(invalid(format!("{owner}: negative amount")));
            }
        }
        for (i, rp) in self.resource_providers.iter().enumerate() {
            let owner = format!("resource_providers[{i}]");
            check_probability("p_e", &owner, rp.p_e)?;
            check_probability("p_unresponsive", &owner, rp.p_unresponsive)?;
            check_trust(&owner, &rp.trusted_mediators)?;
            if rp.balance.is_negative() {
                return Err(invalid(format!("{owner}: negative balance")));
            }
        }
        for (i, m) in self.mediators.iter().enumerate() {
            let owner = format!("mediators[{i}]");
            check_probability("p_unresponsive", &owner, m.p_unresponsive)?;
            if m.balance.is_negative() {
                return Err(invalid(format!("{owner}: negative balance")));
            }
        }
        Ok(())
    }

    fn mediator_set(&self, trusted: &Option<Vec<u32>>) -> BTreeSet<AccountId> {
        match trusted {
            Some(list) => list.iter().map(|&i| AccountId::mediator(i)).collect(),
            None => (0..self.mediators.len() as u32)
                .map(AccountId::mediator)
                .collect(),
        }
    }

    pub fn job_creator_profile(&self, index: usize) -> JobCreatorProfile {
        JobCreatorProfile {
            trusted_mediators: self.mediator_set(&self.job_creators[index].trusted_mediators),
        }
    }

    pub fn resource_provider_profile(&self, index: usize) -> ResourceProviderProfile {
        let rp = &self.resource_providers[index];
        ResourceProviderProfile {
            trusted_mediators: self.mediator_set(&rp.trusted_mediators),
            trusted_directories: rp
                .trusted_directories
                .iter()
                .map(|&d| DirectoryId(d))
                .collect(),
            arch: rp.arch,
            time_per_instruction_us: rp.time_per_instruction_us,
        }
    }

    pub fn mediator_profile(&self, index: usize) -> MediatorProfile {
        let m = &self.mediators[index];
        MediatorProfile {
            arch: m.arch,
            trusted_directories: m
                .trusted_directories
                .iter()
                .map(|&d| DirectoryId(d))
                .collect(),
        }
    }

    /// Creator `index`'s offer for `job`, posted at `now`, with the minimum
    /// deposit plus its match incentive and extra.
    pub fn job_offer(
        &self,
        index: usize,
        job: JobId,
        seed: u64,
        now: Millis,
    ) -> Result<JobOffer, SimError> {
        let jc = &self.job_creators[index];
        let mut offer = JobOffer {
            job_id: job,
            job_creator: AccountId::job_creator(index as u32),
            limits: jc.limits,
            instruction_max_price: jc.instruction_max_price,
            bandwidth_max_price: jc.bandwidth_max_price,
            completion_deadline: now.saturating_add(jc.deadline_ms),
            match_incentive: jc.match_incentive,
            first_layer_hash: mix(seed, job.0 ^ 0x1f),
            directory: DirectoryId(jc.directory),
            job_hash: mix(seed, job.0 ^ 0x2f),
            arch: jc.arch,
            deposit: Money::ZERO,
        };
        offer.deposit = self
            .platform
            .job_offer_min_deposit(&offer)?
            .checked_add(jc.match_incentive)
            .and_then(|d| d.checked_add(jc.deposit_extra))
            .map_err(crate::ledger::LedgerError::from)?;
        Ok(offer)
    }

    pub fn resource_offer(
        &self,
        index: usize,
        id: ResourceOfferId,
    ) -> Result<ResourceOffer, SimError> {
        let rp = &self.resource_providers[index];
        let mut offer = ResourceOffer {
            offer_id: id,
            provider: AccountId::resource_provider(index as u32),
            capacities: rp.capacities,
            instruction_price: rp.instruction_price,
            bandwidth_price: rp.bandwidth_price,
            match_incentive: rp.match_incentive,
            verification_count: 0,
            deposit: Money::ZERO,
        };
        offer.deposit = self
            .platform
            .resource_offer_min_deposit(&offer)?
            .checked_add(rp.match_incentive)
            .and_then(|d| d.checked_add(rp.deposit_extra))
            .map_err(crate::ledger::LedgerError::from)?;
        Ok(offer)
    }

    /// Game symbols for the first creator and provider, from the creator's
    /// side: `d` is what the creator forfeits.
    pub fn game_params(&self) -> Result<GameParams, SimError> {
        self.pair_params(0, 0, false)
    }

    /// Same, with `d` the provider's forfeitable deposit.
    pub fn provider_game_params(&self) -> Result<GameParams, SimError> {
        self.pair_params(0, 0, true)
    }

    fn pair_params(
        &self,
        jc: usize,
        rp: usize,
        provider_side: bool,
    ) -> Result<GameParams, SimError> {
        let jo = self.job_offer(jc, JobId(0), self.seed, 0)?;
        let ro = self.resource_offer(rp, ResourceOfferId(0))?;
        let (jcc, rpc) = (&self.job_creators[jc], &self.resource_providers[rp]);
        let units = Money::to_units;
        let overflow = |_| SimError::ConfigInvalid("price overflow".into());
        let pi_c = units(
            priced_usage(&jcc.usage(), rpc.instruction_price, rpc.bandwidth_price)
                .map_err(overflow)?,
        );
        let pi_c_hat = units(jo.price_estimate().map_err(overflow)?);
        let pi_a = units(self.platform.availability_fee);
        let d = if provider_side {
            units(ro.deposit) - units(ro.match_incentive) - pi_a
        } else {
            units(jo.deposit) - units(jo.match_incentive) - pi_a
        };
        let pi_d = match self.platform.compensation {
            Compensation::JobPrice => pi_c,
            Compensation::Estimate => pi_c_hat,
        };
        let n = self.platform.n;
        Ok(GameParams {
            theta: self.platform.theta as f64,
            n,
            d,
            pi_c,
            pi_c_hat,
            pi_r: pi_c,
            pi_d,
            pi_m: pi_c_hat * n as f64,
            pi_a,
            g_j: units(self.platform.jc_fee),
            g_r: units(self.platform.rp_fee),
            g_m: units(self.platform.mediation_fee),
            b: units(jcc.benefit),
            c_v: units(jcc.verification_cost),
            c_e: units(rpc.execution_cost),
            c_d: units(rpc.deception_cost),
            p_a: jcc.p_a,
            p_e: rpc.p_e,
            p_v: jcc.p_v,
        })
    }
}

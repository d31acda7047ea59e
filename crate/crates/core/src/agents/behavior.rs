//! Per-job decisions of each role.

use serde::{Deserialize, Serialize};

use super::account::PrivateAccount;
use super::job::{execute_job, JobSpec, ResultKind};
use super::rng::{bernoulli, Stream};
use crate::game::RpAction;
use crate::ledger::types::{
    JobResult, MatchId, MediationResult, Millis, Party, ResultHash, ResultStatus, Verdict,
};
use crate::money::{Money, MoneyOverflow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcStrategy {
    pub p_a: f64,
    pub p_v: f64,
    /// Dispute anomalous results of one's own job, as the cheating creator does.
    pub reject_on_anomaly: bool,
    /// Probability of never reacting to a posted result.
    pub p_ignore: f64,
    /// Probability that verification notices a forged result.
    pub detection_probability: f64,
}

impl JcStrategy {
    pub fn honest(p_v: f64) -> JcStrategy {
        JcStrategy {
            p_a: 1.0,
            p_v,
            reject_on_anomaly: false,
            p_ignore: 0.0,
            detection_probability: 1.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        [
            self.p_a,
            self.p_v,
            self.p_ignore,
            self.detection_probability,
        ]
        .iter()
        .all(|p| (0.0..=1.0).contains(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpStrategy {
    pub p_e: f64,
    pub forge_seed: u64,
}

impl RpStrategy {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.p_e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RpCosts {
    pub execute: Money,
    pub deceive: Money,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpOutput {
    pub action: RpAction,
    pub result: JobResult,
}

/// Execute with probability `p_e`, otherwise forge. `decide` and `run` are
/// separate streams so the choice does not shift the execution draws.
#[allow(clippy::too_many_arguments)]
pub fn rp_act(
    strategy: &RpStrategy,
    spec: &JobSpec,
    match_id: MatchId,
    now: Millis,
    costs: RpCosts,
    account: &mut PrivateAccount,
    decide: &mut Stream,
    run: &mut Stream,
) -> Result<RpOutput, MoneyOverflow> {
    let (action, hash) = if bernoulli(decide, strategy.p_e) {
        account.charge_execution(costs.execute)?;
        (RpAction::Execute, execute_job(spec, run).hash)
    } else {
        account.charge_deception(costs.deceive)?;
        (RpAction::Deceive, spec.forge(strategy.forge_seed, run))
    };
    Ok(RpOutput {
        action,
        result: JobResult {
            match_id,
            status: ResultStatus::Completed,
            result_hash: hash,
            usage: spec.resource_profile,
            uri: format!("dir://{}/{}", spec.job_id.0, match_id.0),
            timestamp: now,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reaction {
    Accept,
    Reject,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JcDecision {
    pub reaction: Reaction,
    pub verified: bool,
}

pub fn jc_react(
    strategy: &JcStrategy,
    spec: &JobSpec,
    result: &JobResult,
    verification_cost: Money,
    account: &mut PrivateAccount,
    rng: &mut Stream,
) -> Result<JcDecision, MoneyOverflow> {
    if bernoulli(rng, strategy.p_ignore) {
        return Ok(JcDecision {
            reaction: Reaction::Ignore,
            verified: false,
        });
    }
    if !bernoulli(rng, strategy.p_v) {
        return Ok(JcDecision {
            reaction: Reaction::Accept,
            verified: false,
        });
    }
    account.charge_verification(verification_cost)?;
    let reject = match spec.classify(result.result_hash) {
        ResultKind::Normal => false,
        ResultKind::Anomalous => strategy.reject_on_anomaly,
        ResultKind::Forged => bernoulli(rng, strategy.detection_probability),
    };
    let reaction = if reject {
        Reaction::Reject
    } else {
        Reaction::Accept
    };
    Ok(JcDecision {
        reaction,
        verified: true,
    })
}

/// Re-run the job `n` times and assign fault.
///
/// Any anomalous or disagreeing replica faults the creator. Only unanimous
/// normal replicas can fault the provider, which happens with probability
/// `p_a^n`.
pub fn mediate(
    spec: &JobSpec,
    match_id: MatchId,
    rp_result: ResultHash,
    n: u32,
    rng: &mut Stream,
) -> MediationResult {
    assert!(n > 0, "mediation needs at least one replica");
    let samples: Vec<_> = (0..n).map(|_| execute_job(spec, rng)).collect();
    let unanimous_normal = samples.iter().all(|s| s.normal);
    let (verdict, faulty_party, result_hash) = if unanimous_normal {
        if rp_result == spec.true_hash {
            (Verdict::CorrectResults, Party::JobCreator, spec.true_hash)
        } else {
            (
                Verdict::WrongResults,
                Party::ResourceProvider,
                spec.true_hash,
            )
        }
    } else {
        let any_normal = samples.iter().any(|s| s.normal);
        let verdict = if any_normal && rp_result == spec.true_hash {
            Verdict::CorrectResults
        } else {
            Verdict::NonDeterministic
        };
        (verdict, Party::JobCreator, samples[0].hash)
    };
    MediationResult {
        match_id,
        verdict,
        faulty_party,
        usage: spec.resource_profile,
        result_hash,
    }
}

/// Whether a mediator or provider stays silent on this job.
pub fn unresponsive(p: f64, rng: &mut Stream) -> bool {
    bernoulli(rng, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::rng::{stream, Purpose};
    use crate::ledger::types::{JobId, ResourceVector};
    use crate::registry::AccountId;

    const RP: AccountId = AccountId::resource_provider(0);
    const JC: AccountId = AccountId::job_creator(0);
    const MED: AccountId = AccountId::mediator(0);
    const COSTS: RpCosts = RpCosts {
        execute: Money(7),
        deceive: Money(1),
    };

    fn spec(job: u64, p_a: f64) -> JobSpec {
        JobSpec::new(JobId(job), p_a, 42, ResourceVector::new(4, 1, 0, 0))
    }

    fn act(p_e: f64, job: u64, p_a: f64, account: &mut PrivateAccount) -> RpOutput {
        let s = spec(job, p_a);
        let mut d = stream(3, RP, s.job_id, Purpose::Decide);
        let mut r = stream(3, RP, s.job_id, Purpose::Execute);
        let strat = RpStrategy { p_e, forge_seed: 9 };
        rp_act(&strat, &s, MatchId(job), 0, COSTS, account, &mut d, &mut r).unwrap()
    }

    fn react(strategy: &JcStrategy, s: &JobSpec, hash: ResultHash) -> JcDecision {
        let result = JobResult {
            match_id: MatchId(0),
            status: ResultStatus::Completed,
            result_hash: hash,
            usage: s.resource_profile,
            uri: String::new(),
            timestamp: 0,
        };
        let mut acct = PrivateAccount::default();
        let mut rng = stream(5, JC, s.job_id, Purpose::React);
        jc_react(strategy, s, &result, Money(2), &mut acct, &mut rng).unwrap()
    }

    fn cheating(p_a: f64, p_v: f64) -> JcStrategy {
        JcStrategy {
            p_a,
            p_v,
            reject_on_anomaly: true,
            p_ignore: 0.0,
            detection_probability: 1.0,
        }
    }

    #[test]
    fn honest_provider_returns_an_execution_sample() {
        let mut acct = PrivateAccount::default();
        let out = act(1.0, 1, 1.0, &mut acct);
        assert_eq!(out.action, RpAction::Execute);
        assert_eq!(out.result.result_hash, spec(1, 1.0).true_hash);
        assert_eq!(acct.execution_cost, Money(7));
        assert_eq!(acct.deception_cost, Money(0));
    }

    #[test]
    fn forging_provider_pays_the_deception_cost() {
        let mut acct = PrivateAccount::default();
        let out = act(0.0, 1, 1.0, &mut acct);
        assert_eq!(out.action, RpAction::Deceive);
        assert_eq!(
            spec(1, 1.0).classify(out.result.result_hash),
            ResultKind::Forged
        );
        assert_eq!(acct.deception_cost, Money(1));
        assert_eq!(acct.executions, 0);
    }

    #[test]
    fn execute_fraction_matches_p_e() {
        let mut acct = PrivateAccount::default();
        let n = 10_000;
        let executed = (0..n)
            .filter(|&j| act(0.5, j, 0.9, &mut acct).action == RpAction::Execute)
            .count();
        let frac = executed as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
        assert_eq!(acct.executions + acct.forgeries, n);
    }

    #[test]
    fn pass_branch_always_accepts() {
        let s = spec(1, 0.5);
        for j in 0..200 {
            let s = spec(j, 0.5);
            let forged = s.forge(1, &mut stream(0, RP, s.job_id, Purpose::Forge));
            let d = react(&cheating(0.5, 0.0), &s, forged);
            assert_eq!(
                d,
                JcDecision {
                    reaction: Reaction::Accept,
                    verified: false
                }
            );
        }
        let d = react(&cheating(0.5, 0.0), &s, s.true_hash);
        assert_eq!(d.reaction, Reaction::Accept);
    }

    #[test]
    fn verification_always_catches_forgery() {
        for j in 0..200 {
            let s = spec(j, 0.9);
            let forged = s.forge(1, &mut stream(0, RP, s.job_id, Purpose::Forge));
            let d = react(&JcStrategy::honest(1.0), &s, forged);
            assert_eq!(
                d,
                JcDecision {
                    reaction: Reaction::Reject,
                    verified: true
                }
            );
        }
    }

    #[test]
    fn cheating_creator_rejects_anomalies_at_rate_one_minus_p_a() {
        let trials = 10_000;
        let mut rejects = 0;
        for j in 0..trials {
            let s = spec(j, 0.9);
            let mut run = stream(8, RP, s.job_id, Purpose::Execute);
            let hash = execute_job(&s, &mut run).hash;
            if react(&cheating(0.9, 1.0), &s, hash).reaction == Reaction::Reject {
                rejects += 1;
            }
        }
        let frac = rejects as f64 / trials as f64;
        // 3 standard errors of a Bernoulli(0.1) mean at 10^4.
        assert!((frac - 0.1).abs() < 0.009, "{frac}");
    }

    #[test]
    fn ignoring_creator_spends_nothing() {
        let s = spec(1, 1.0);
        let strat = JcStrategy {
            p_ignore: 1.0,
            ..JcStrategy::honest(1.0)
        };
        let d = react(&strat, &s, s.true_hash);
        assert_eq!(
            d,
            JcDecision {
                reaction: Reaction::Ignore,
                verified: false
            }
        );
    }

    #[test]
    fn deterministic_job_mediation() {
        for j in 0..200 {
            let s = spec(j, 1.0);
            let mut rng = stream(1, MED, s.job_id, Purpose::Mediate);
            let forged = s.forge(3, &mut stream(1, RP, s.job_id, Purpose::Forge));
            let m = mediate(&s, MatchId(j), forged, 2, &mut rng);
            assert_eq!(
                (m.verdict, m.faulty_party),
                (Verdict::WrongResults, Party::ResourceProvider)
            );
            let m = mediate(&s, MatchId(j), s.true_hash, 2, &mut rng);
            assert_eq!(
                (m.verdict, m.faulty_party),
                (Verdict::CorrectResults, Party::JobCreator)
            );
            assert!(m.is_consistent());
        }
    }

    #[test]
    fn creator_fault_rate_is_one_minus_p_a_to_the_n() {
        let trials = 100_000u64;
        let mut jc_faulted = 0;
        for j in 0..trials {
            let s = spec(j, 0.99);
            let mut rng = stream(11, MED, s.job_id, Purpose::Mediate);
            let anomalous = execute_job(&spec(j, 0.0), &mut rng).hash;
            let m = mediate(&s, MatchId(j), anomalous, 2, &mut rng);
            assert!(m.is_consistent());
            if m.faulty_party == Party::JobCreator {
                jc_faulted += 1;
            }
        }
        let frac = jc_faulted as f64 / trials as f64;
        assert!((frac - 0.0199).abs() < 0.002, "{frac}");
    }

    #[test]
    fn disagreeing_replicas_with_a_correct_provider_clear_the_provider() {
        // p_a = 0.5 with n = 4 makes mixed replica sets common.
        let mut seen = false;
        for j in 0..200 {
            let s = spec(j, 0.5);
            let mut rng = stream(2, MED, s.job_id, Purpose::Mediate);
            let m = mediate(&s, MatchId(j), s.true_hash, 4, &mut rng);
            assert_eq!(m.faulty_party, Party::JobCreator);
            seen |= m.verdict == Verdict::CorrectResults;
        }
        assert!(seen);
    }
}

//! The scenario loop.
//!
//! Each block the agents look at the ledger and queue calls in a fixed order:
//! creators, providers, the solver, then mediators. Sealing the block applies
//! the queue; the emitted events then update the per-job bookkeeping.

use std::collections::BTreeMap;
use std::io::{self, Write};

use super::clock::{Applied, BlockClock};
use super::config::ScenarioConfig;
use super::metrics::{AgentMetrics, Metrics};
use super::SimError;
use crate::agents::{
    jc_react, mediate, rp_act, stream, unresponsive, JcDecision, JcStrategy, JobSpec,
    PrivateAccount, Purpose, Reaction, RpCosts, RpStrategy,
};
use crate::game::{JcAction, Outcome, RpAction};
use crate::ledger::{
    write_event_csv, Call, CloseKind, JobFsmState, JobId, Ledger, LedgerError, LedgerEvent,
    MatchId, OfferRef, Payouts, RejectionReason, ResourceOfferId,
};
use crate::matching::{execution_time_ms, solve};
use crate::money::{Money, MoneyOverflow};
use crate::registry::AccountId;

const SOLVER: AccountId = AccountId::solver(0);

pub struct RunOutput {
    pub metrics: Metrics,
    pub ledger: Ledger,
}

impl RunOutput {
    pub fn write_trace<W: Write>(&self, out: W) -> io::Result<()> {
        write_event_csv(out, self.ledger.events())
    }

    pub fn trace_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_trace(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

struct Creator {
    id: AccountId,
    strategy: JcStrategy,
    benefit: Money,
    verification_cost: Money,
    account: PrivateAccount,
    active: Option<JobId>,
}

struct Provider {
    id: AccountId,
    strategy: RpStrategy,
    costs: RpCosts,
    p_unresponsive: f64,
    tpi_us: u64,
    account: PrivateAccount,
    open_offer: Option<ResourceOfferId>,
    retired: bool,
}

struct Mediator {
    id: AccountId,
    p_unresponsive: f64,
}

/// What the simulator knows about one live job round.
struct Track {
    creator: usize,
    spec: JobSpec,
    match_id: Option<MatchId>,
    provider: Option<usize>,
    mediator: Option<usize>,
    rp_silent: Option<bool>,
    rp_action: Option<RpAction>,
    rp_cost: Money,
    decision: Option<JcDecision>,
    rp_accept_sent: bool,
    med_silent: Option<bool>,
    mediation_sent: bool,
}

struct Sim<'a> {
    config: &'a ScenarioConfig,
    seed: u64,
    ledger: Ledger,
    clock: BlockClock,
    creators: Vec<Creator>,
    providers: Vec<Provider>,
    mediators: Vec<Mediator>,
    tracks: BTreeMap<JobId, Track>,
    genesis: BTreeMap<AccountId, Money>,
    metrics: Metrics,
    next_job: u64,
    next_offer: u64,
    cursor: usize,
}

fn error_kind(e: &LedgerError) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or("Unknown")
        .to_string()
}

fn overflow(_: MoneyOverflow) -> SimError {
    SimError::Ledger(LedgerError::Overflow(MoneyOverflow))
}

/// Runs `config` to completion with the given seed.
pub fn run_scenario(config: &ScenarioConfig, seed: u64) -> Result<RunOutput, SimError> {
    config.validate()?;
    let mut sim = Sim::new(config, seed)?;
    sim.run()?;
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn new(config: &'a ScenarioConfig, seed: u64) -> Result<Sim<'a>, SimError> {
        let creators: Vec<_> = config
            .job_creators
            .iter()
            .enumerate()
            .map(|(i, c)| Creator {
                id: AccountId::job_creator(i as u32),
                strategy: JcStrategy {
                    p_a: c.p_a,
                    p_v: c.p_v,
                    reject_on_anomaly: c.reject_on_anomaly,
                    p_ignore: c.p_ignore,
                    detection_probability: c.detection_probability,
                },
                benefit: c.benefit,
                verification_cost: c.verification_cost,
                account: PrivateAccount::default(),
                active: None,
            })
            .collect();
        let providers: Vec<_> = config
            .resource_providers
            .iter()
            .enumerate()
            .map(|(i, r)| Provider {
                id: AccountId::resource_provider(i as u32),
                strategy: RpStrategy {
                    p_e: r.p_e,
                    forge_seed: r.forge_seed,
                },
                costs: RpCosts {
                    execute: r.execution_cost,
                    deceive: r.deception_cost,
                },
                p_unresponsive: r.p_unresponsive,
                tpi_us: r.time_per_instruction_us,
                account: PrivateAccount::default(),
                open_offer: None,
                retired: false,
            })
            .collect();
        let mediators: Vec<_> = config
            .mediators
            .iter()
            .enumerate()
            .map(|(i, m)| Mediator {
                id: AccountId::mediator(i as u32),
                p_unresponsive: m.p_unresponsive,
            })
            .collect();
        let mut genesis = BTreeMap::new();
        for (c, cfg) in creators.iter().zip(&config.job_creators) {
            genesis.insert(c.id, cfg.balance);
        }
        for (p, cfg) in providers.iter().zip(&config.resource_providers) {
            genesis.insert(p.id, cfg.balance);
        }
        for (m, cfg) in mediators.iter().zip(&config.mediators) {
            genesis.insert(m.id, cfg.balance);
        }
        genesis.insert(SOLVER, Money::ZERO);
        let ledger = Ledger::genesis(config.platform.clone(), genesis.clone())?;
        Ok(Sim {
            config,
            seed,
            ledger,
            clock: BlockClock::new(config.block_interval_ms),
            creators,
            providers,
            mediators,
            tracks: BTreeMap::new(),
            genesis,
            metrics: Metrics {
                seed,
                ..Metrics::default()
            },
            next_job: 0,
            next_offer: 0,
            cursor: 0,
        })
    }

    fn max_blocks(&self) -> u64 {
        self.config
            .max_blocks
            .unwrap_or_else(|| 1_000 + self.config.job_count.saturating_mul(1_000))
    }

    fn done(&self) -> bool {
        self.next_job >= self.config.job_count && self.tracks.is_empty()
    }

    fn run(&mut self) -> Result<(), SimError> {
        for i in 0..self.creators.len() {
            let profile = self.config.job_creator_profile(i);
            self.clock
                .submit(self.creators[i].id, Call::RegisterJobCreator(profile), None);
        }
        for i in 0..self.providers.len() {
            let profile = self.config.resource_provider_profile(i);
            self.clock.submit(
                self.providers[i].id,
                Call::RegisterResourceProvider(profile),
                None,
            );
        }
        for i in 0..self.mediators.len() {
            let profile = self.config.mediator_profile(i);
            self.clock
                .submit(self.mediators[i].id, Call::RegisterMediator(profile), None);
        }
        self.seal()?;

        let limit = self.max_blocks();
        while !self.done() {
            if self.clock.height() >= limit {
                self.metrics.stalled = true;
                break;
            }
            self.creators_act()?;
            self.providers_act()?;
            self.solver_acts();
            self.mediators_act();
            self.seal()?;
        }

        // Withdraw offers nobody will match.
        for p in &mut self.providers {
            if let Some(id) = p.open_offer.take() {
                self.clock
                    .submit(p.id, Call::CancelOffer(OfferRef::Resource(id)), None);
            }
        }
        if !self.clock.pending().is_empty() {
            self.seal()?;
        }
        Ok(())
    }

    fn seal(&mut self) -> Result<(), SimError> {
        let applied = self.clock.seal(&mut self.ledger);
        for a in applied {
            self.record_application(a);
        }
        let events: Vec<LedgerEvent> = self.ledger.events()[self.cursor..]
            .iter()
            .map(|r| r.event.clone())
            .collect();
        self.cursor = self.ledger.events().len();
        for e in events {
            self.observe(e)?;
        }
        if self.ledger.conservation_residual() != 0 {
            self.metrics.residual_violations += 1;
        }
        Ok(())
    }

    fn record_application(&mut self, a: Applied) {
        let Err(e) = a.result else { return };
        self.metrics.failed_calls += 1;
        *self.metrics.failures.entry(error_kind(&e)).or_default() += 1;
        if let Some(job) = a.round {
            if let Some(t) = self.tracks.remove(&job) {
                self.creators[t.creator].active = None;
                self.metrics.rounds_aborted += 1;
            }
        }
        if a.caller.role == crate::registry::Role::ResourceProvider {
            if let Some(p) = self.providers.iter_mut().find(|p| p.id == a.caller) {
                if a.round.is_none() {
                    // A provider that cannot post an offer stops offering.
                    p.open_offer = None;
                    p.retired = true;
                }
            }
        }
    }

    fn observe(&mut self, e: LedgerEvent) -> Result<(), SimError> {
        match e {
            LedgerEvent::JobOfferPosted { .. } => self.metrics.jobs += 1,
            LedgerEvent::Matched {
                match_id,
                job,
                offer,
                mediator,
                ..
            } => {
                self.metrics.matches += 1;
                let provider = self
                    .providers
                    .iter()
                    .position(|p| p.open_offer == Some(offer));
                if let Some(i) = provider {
                    self.providers[i].open_offer = None;
                }
                let rp = self.ledger.get_match(match_id).map(|m| m.provider);
                if let Some(t) = self.tracks.get_mut(&job) {
                    t.match_id = Some(match_id);
                    t.provider = rp.map(|id| id.index as usize);
                    t.mediator = Some(mediator.index as usize);
                }
            }
            LedgerEvent::ResultPosted { .. } => self.metrics.results += 1,
            LedgerEvent::JobAssignedForMediation { .. } => self.metrics.mediations += 1,
            LedgerEvent::MatchClosed {
                match_id,
                job,
                kind,
                payouts,
            } => {
                self.metrics.closed += 1;
                self.close(job, match_id, kind, payouts)?;
            }
            LedgerEvent::JobTimedOut { job, .. } => {
                self.metrics.timed_out += 1;
                self.retire_round(job)?;
            }
            LedgerEvent::JobOfferCanceled { job, .. } => {
                self.metrics.canceled += 1;
                self.retire_round(job)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Ends a round without an outcome leaf.
    fn retire_round(&mut self, job: JobId) -> Result<Option<Track>, SimError> {
        let Some(t) = self.tracks.remove(&job) else {
            return Ok(None);
        };
        let c = &mut self.creators[t.creator];
        c.active = None;
        if t.rp_action == Some(RpAction::Execute) {
            c.account.credit_benefit(c.benefit).map_err(overflow)?;
        }
        Ok(Some(t))
    }

    fn close(
        &mut self,
        job: JobId,
        match_id: MatchId,
        kind: CloseKind,
        payouts: Payouts,
    ) -> Result<(), SimError> {
        let Some(t) = self.retire_round(job)? else {
            return Ok(());
        };
        let Some(rp_action) = t.rp_action else {
            self.metrics.other_outcomes += 1;
            return Ok(());
        };
        let verified = t.decision.is_some_and(|d| d.verified);
        let jc_action = if verified {
            JcAction::Verify
        } else {
            JcAction::Pass
        };
        let normal = self
            .ledger
            .get_match(match_id)
            .and_then(|m| m.result.as_ref())
            .is_some_and(|r| r.result_hash == t.spec.true_hash);
        use crate::ledger::types::Party;
        let outcome = match (rp_action, verified, kind) {
            (RpAction::Deceive, true, CloseKind::Mediated(Party::JobCreator)) => Some(Outcome::O1),
            (RpAction::Deceive, true, CloseKind::Mediated(Party::ResourceProvider)) => {
                Some(Outcome::O2)
            }
            (
                RpAction::Deceive,
                false,
                CloseKind::AcceptedByCreator | CloseKind::AcceptedByProvider,
            ) => Some(Outcome::O3),
            (
                RpAction::Execute,
                false,
                CloseKind::AcceptedByCreator | CloseKind::AcceptedByProvider,
            ) => Some(Outcome::O4),
            (RpAction::Execute, true, CloseKind::AcceptedByCreator) if normal => Some(Outcome::O5),
            (RpAction::Execute, true, CloseKind::Mediated(Party::JobCreator)) => Some(Outcome::O6),
            (RpAction::Execute, true, CloseKind::Mediated(Party::ResourceProvider)) => {
                Some(Outcome::O7)
            }
            _ => None,
        };
        let Some(outcome) = outcome else {
            self.metrics.other_outcomes += 1;
            return Ok(());
        };
        self.metrics.outcomes[outcome.index()] += 1;

        // Contract money attributable to this job, plus the private part.
        let platform = self.ledger.platform();
        let jc_record = self.ledger.job(job).expect("closed job exists");
        let m = self
            .ledger
            .get_match(match_id)
            .expect("closed match exists");
        let ro = self
            .ledger
            .resource_offer(m.matched.resource_offer)
            .expect("matched offer exists");
        let mut jc_delta = payouts.job_creator.amount()
            - jc_record.offer.deposit.amount()
            - platform.jc_fee.amount();
        if m.rejection.is_some() {
            jc_delta -= platform.mediation_fee.amount();
        }
        let rp_delta = payouts.resource_provider.amount()
            - ro.offer.deposit.amount()
            - platform.rp_fee.amount();
        let c = &self.creators[t.creator];
        let mut jc_private = 0;
        if rp_action == RpAction::Execute {
            jc_private += c.benefit.amount();
        }
        if verified {
            jc_private -= c.verification_cost.amount();
        }
        let rp_private = -t.rp_cost.amount();
        let units = |x: i64| Money(x).to_units();
        let stats = self
            .metrics
            .rewards
            .entry((rp_action, jc_action))
            .or_default();
        stats.jc.push(units(jc_delta + jc_private));
        stats.rp.push(units(rp_delta + rp_private));
        Ok(())
    }

    fn creators_act(&mut self) -> Result<(), SimError> {
        let next = self.clock.next_time();
        for i in 0..self.creators.len() {
            if let Some(job) = self.creators[i].active {
                self.creator_follow_up(i, job, next)?;
                continue;
            }
            if self.next_job >= self.config.job_count {
                continue;
            }
            let job = JobId(self.next_job);
            self.next_job += 1;
            let offer = self.config.job_offer(i, job, self.seed, next)?;
            let usage = self.config.job_creators[i].usage();
            let spec = JobSpec::new(job, self.creators[i].strategy.p_a, self.seed, usage);
            self.tracks.insert(
                job,
                Track {
                    creator: i,
                    spec,
                    match_id: None,
                    provider: None,
                    mediator: None,
                    rp_silent: None,
                    rp_action: None,
                    rp_cost: Money::ZERO,
                    decision: None,
                    rp_accept_sent: false,
                    med_silent: None,
                    mediation_sent: false,
                },
            );
            self.creators[i].active = Some(job);
            self.clock
                .submit(self.creators[i].id, Call::PostJobOffer(offer), Some(job));
        }
        Ok(())
    }

    fn creator_follow_up(&mut self, i: usize, job: JobId, next: u64) -> Result<(), SimError> {
        let Some(record) = self.ledger.job(job) else {
            return Ok(());
        };
        let id = self.creators[i].id;
        let deadline = record.offer.completion_deadline;
        match record.state() {
            JobFsmState::OfferPosted if next > deadline => {
                self.clock
                    .submit(id, Call::CancelOffer(OfferRef::Job(job)), Some(job));
            }
            JobFsmState::Matched if next > deadline => {
                let m = record.match_id.expect("matched job has a match");
                self.clock.submit(id, Call::Timeout(m), Some(job));
            }
            JobFsmState::ResultPosted => {
                let t = self.tracks.get_mut(&job).expect("tracked");
                if t.decision.is_some() {
                    return Ok(());
                }
                let m = self
                    .ledger
                    .get_match(t.match_id.expect("matched"))
                    .expect("match");
                let result = m.result.as_ref().expect("result posted");
                let c = &mut self.creators[i];
                let mut rng = stream(self.seed, id, job, Purpose::React);
                let d = jc_react(
                    &c.strategy,
                    &t.spec,
                    result,
                    c.verification_cost,
                    &mut c.account,
                    &mut rng,
                )
                .map_err(overflow)?;
                t.decision = Some(d);
                if d.reaction != Reaction::Ignore && d.verified {
                    self.metrics.verifications += 1;
                }
                let match_id = m.id;
                match d.reaction {
                    Reaction::Accept => {
                        self.clock
                            .submit(id, Call::AcceptResult(match_id), Some(job));
                    }
                    Reaction::Reject => self.clock.submit(
                        id,
                        Call::RejectResult(match_id, RejectionReason::WrongResults),
                        Some(job),
                    ),
                    Reaction::Ignore => {}
                }
            }
            JobFsmState::MediationRequested => {
                let m = self
                    .ledger
                    .get_match(record.match_id.expect("matched"))
                    .expect("match");
                if next > m.mediation_deadline.expect("armed") {
                    self.clock.submit(id, Call::Timeout(m.id), Some(job));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn providers_act(&mut self) -> Result<(), SimError> {
        let next = self.clock.next_time();
        let jobs: Vec<JobId> = self.tracks.keys().copied().collect();
        for job in jobs {
            let t = &self.tracks[&job];
            let (Some(pi), Some(match_id)) = (t.provider, t.match_id) else {
                continue;
            };
            let record = self.ledger.job(job).expect("tracked job exists");
            let m = self.ledger.get_match(match_id).expect("match exists");
            let p = &self.providers[pi];
            match record.state() {
                JobFsmState::Matched if t.rp_action.is_none() => {
                    let silent = match t.rp_silent {
                        Some(s) => s,
                        None => {
                            let mut rng = stream(self.seed, p.id, job, Purpose::Unresponsive);
                            let s = unresponsive(p.p_unresponsive, &mut rng);
                            self.tracks.get_mut(&job).expect("tracked").rp_silent = Some(s);
                            s
                        }
                    };
                    let ready = m.matched.match_time
                        + execution_time_ms(record.offer.limits.instructions, p.tpi_us);
                    if silent || next < ready || next > record.offer.completion_deadline {
                        continue;
                    }
                    let t = self.tracks.get_mut(&job).expect("tracked");
                    let p = &mut self.providers[pi];
                    let mut decide = stream(self.seed, p.id, job, Purpose::Decide);
                    let mut run = stream(self.seed, p.id, job, Purpose::Execute);
                    let before = p.account.net().map_err(overflow)?;
                    let out = rp_act(
                        &p.strategy,
                        &t.spec,
                        match_id,
                        next,
                        p.costs,
                        &mut p.account,
                        &mut decide,
                        &mut run,
                    )
                    .map_err(overflow)?;
                    let after = p.account.net().map_err(overflow)?;
                    t.rp_action = Some(out.action);
                    t.rp_cost = before.checked_sub(after).map_err(overflow)?;
                    self.clock
                        .submit(p.id, Call::PostResult(out.result), Some(job));
                }
                JobFsmState::ResultPosted
                    if !t.rp_accept_sent
                        && t.decision.is_some_and(|d| d.reaction == Reaction::Ignore)
                        && next > m.reaction_deadline.expect("armed") =>
                {
                    let id = p.id;
                    self.tracks.get_mut(&job).expect("tracked").rp_accept_sent = true;
                    self.clock
                        .submit(id, Call::AcceptResult(match_id), Some(job));
                }
                _ => {}
            }
        }

        let more_work = self.next_job < self.config.job_count || !self.tracks.is_empty();
        for i in 0..self.providers.len() {
            let p = &self.providers[i];
            if p.open_offer.is_some() || p.retired || !more_work {
                continue;
            }
            let id = ResourceOfferId(self.next_offer);
            self.next_offer += 1;
            let offer = self.config.resource_offer(i, id)?;
            let p = &mut self.providers[i];
            p.open_offer = Some(id);
            self.clock
                .submit(p.id, Call::PostResourceOffer(offer), None);
        }
        Ok(())
    }

    fn solver_acts(&mut self) {
        let jobs = self.ledger.pending_job_offers();
        let ros = self.ledger.pending_resource_offers();
        if jobs.is_empty() || ros.is_empty() {
            return;
        }
        let matches = solve(
            self.config.solver_mode,
            &jobs,
            &ros,
            self.ledger.registry(),
            self.clock.next_time(),
        );
        for m in matches {
            self.clock.submit(SOLVER, Call::PostMatch(m), None);
        }
    }

    fn mediators_act(&mut self) {
        let jobs: Vec<JobId> = self.tracks.keys().copied().collect();
        for job in jobs {
            let t = &self.tracks[&job];
            let (Some(mi), Some(match_id)) = (t.mediator, t.match_id) else {
                continue;
            };
            if t.mediation_sent
                || self.ledger.job(job).map(|r| r.state()) != Some(JobFsmState::MediationRequested)
            {
                continue;
            }
            let med = &self.mediators[mi];
            let silent = match t.med_silent {
                Some(s) => s,
                None => {
                    let mut rng = stream(self.seed, med.id, job, Purpose::Unresponsive);
                    unresponsive(med.p_unresponsive, &mut rng)
                }
            };
            let t = self.tracks.get_mut(&job).expect("tracked");
            t.med_silent = Some(silent);
            if silent {
                continue;
            }
            let rp_hash = self
                .ledger
                .get_match(match_id)
                .and_then(|m| m.result.as_ref())
                .map(|r| r.result_hash)
                .expect("mediated match has a result");
            let mut rng = stream(self.seed, med.id, job, Purpose::Mediate);
            let verdict = mediate(
                &t.spec,
                match_id,
                rp_hash,
                self.ledger.platform().n,
                &mut rng,
            );
            t.mediation_sent = true;
            self.clock
                .submit(med.id, Call::PostMediationResult(verdict), Some(job));
        }
    }

    fn finish(mut self) -> RunOutput {
        self.metrics.blocks = self.clock.height();
        self.metrics.conservation_residual = self.ledger.audited_conservation_residual();
        let private: BTreeMap<AccountId, Money> = self
            .creators
            .iter()
            .map(|c| (c.id, c.account))
            .chain(self.providers.iter().map(|p| (p.id, p.account)))
            .map(|(id, a)| (id, a.net().unwrap_or(Money::ZERO)))
            .collect();
        for (&id, &start) in &self.genesis {
            let delta = Money(self.ledger.balance(id).amount() - start.amount());
            let private_total = private.get(&id).copied().unwrap_or(Money::ZERO);
            self.metrics.agents.insert(
                id,
                AgentMetrics {
                    ledger_delta: delta,
                    private_total,
                    utility: Money(delta.amount() + private_total.amount()),
                },
            );
        }
        RunOutput {
            metrics: self.metrics,
            ledger: self.ledger,
        }
    }
}

//! In-memory contract ledger.
//!
//! The [`Ledger`] is the single owner of all market state: balances,
//! escrowed deposits, offers, matches, results and the event log. Every
//! mutating call validates completely before touching state, so a rejected
//! call leaves the ledger unchanged.
//!
//! Money flows:
//!
//! * Posting an offer moves the deposit into escrow and the flat
//!   participation fee (`jc_fee` / `rp_fee`) to the contract sink.
//! * A match pays the solver both offers' `match_incentive` out of escrow.
//! * Closing a match charges each side the availability fee out of its own
//!   escrow and pays both to the mediator. On acceptance the provider then
//!   receives the job price from the creator's escrow. After a mediation the
//!   faulty side's remaining escrow is forfeited: the mediator takes
//!   `price_estimate * n`, the wronged side takes the compensation, and any
//!   residual goes to the sink.

pub mod error;
pub mod event;
pub mod types;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use error::LedgerError;
pub use event::{
    write_event_csv, CloseKind, LedgerEvent, Payouts, RecordedEvent, TimeoutKind, EVENT_CSV_HEADER,
};
pub use types::*;

use crate::matching::{check_feasible, eligible_mediators, Pending, Violation};
use crate::money::{self, Money, MoneyOverflow};
use crate::registry::{
    AccountId, JobCreatorProfile, MediatorProfile, Registry, ResourceProviderProfile, Role,
};

pub type Result<T> = std::result::Result<T, LedgerError>;

/// Job price from measured usage at the provider's ask prices.
pub fn compute_job_price(
    result: &JobResult,
    ro: &ResourceOffer,
) -> std::result::Result<Money, MoneyOverflow> {
    priced_usage(&result.usage, ro.instruction_price, ro.bandwidth_price)
}

/// `estimate * theta + estimate * n + availability`.
pub fn compute_min_deposit(
    estimate: Money,
    theta: i64,
    n: u32,
    availability: Money,
) -> Result<Money> {
    if theta < 0 {
        return Err(LedgerError::InvalidPlatform(
            "penalty rate must be non-negative",
        ));
    }
    if n == 0 {
        return Err(LedgerError::InvalidPlatform(
            "replication count must be positive",
        ));
    }
    let penalty = estimate.checked_mul(theta as u64)?;
    let mediation = estimate.checked_mul(n as u64)?;
    Ok(penalty.checked_add(mediation)?.checked_add(availability)?)
}

/// What the wronged party receives after a mediation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compensation {
    /// The job price implied by the provider's reported usage.
    #[default]
    JobPrice,
    /// The creator's price estimate.
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlatformParams {
    /// Penalty rate θ.
    pub theta: i64,
    /// Mediator replication count.
    pub n: u32,
    pub jc_fee: Money,
    pub rp_fee: Money,
    pub mediation_fee: Money,
    /// Charged to each side when a match closes; paid to the mediator.
    pub availability_fee: Money,
    pub compensation: Compensation,
    pub reaction_window_ms: Millis,
    pub mediation_window_ms: Millis,
}

impl Default for PlatformParams {
    fn default() -> Self {
        PlatformParams {
            theta: 50,
            n: 2,
            jc_fee: Money::ZERO,
            rp_fee: Money::ZERO,
            mediation_fee: Money::ZERO,
            availability_fee: Money::ZERO,
            compensation: Compensation::JobPrice,
            reaction_window_ms: 30_000,
            mediation_window_ms: 300_000,
        }
    }
}

impl PlatformParams {
    pub fn validate(&self) -> Result<()> {
        compute_min_deposit(Money::ZERO, self.theta, self.n, Money::ZERO)?;
        let fees = [
            self.jc_fee,
            self.rp_fee,
            self.mediation_fee,
            self.availability_fee,
        ];
        if fees.iter().any(|f| f.is_negative()) {
            return Err(LedgerError::InvalidPlatform("fees must be non-negative"));
        }
        Ok(())
    }

    pub fn job_offer_min_deposit(&self, offer: &JobOffer) -> Result<Money> {
        compute_min_deposit(
            offer.price_estimate()?,
            self.theta,
            self.n,
            self.availability_fee,
        )
    }

    pub fn resource_offer_min_deposit(&self, offer: &ResourceOffer) -> Result<Money> {
        compute_min_deposit(
            offer.price_estimate()?,
            self.theta,
            self.n,
            self.availability_fee,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OfferRef {
    Job(JobId),
    Resource(ResourceOfferId),
}

/// Grounds the job creator cites when rejecting a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectionReason {
    WrongResults,
    ResultNotFound,
    TooMuchCost,
    DisputedStatus(ResultStatus),
}

/// A protocol call, for serialized application through [`Ledger::apply`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Call {
    RegisterJobCreator(JobCreatorProfile),
    RegisterResourceProvider(ResourceProviderProfile),
    RegisterMediator(MediatorProfile),
    PostJobOffer(JobOffer),
    PostResourceOffer(ResourceOffer),
    CancelOffer(OfferRef),
    PostMatch(Match),
    PostResult(JobResult),
    AcceptResult(MatchId),
    RejectResult(MatchId, RejectionReason),
    PostMediationResult(MediationResult),
    Timeout(MatchId),
}

#[derive(Debug, Clone)]
pub struct JobRecord {
    pub offer: JobOffer,
    pub arrival: u64,
    pub escrow: Money,
    pub history: Vec<JobFsmState>,
    pub match_id: Option<MatchId>,
}

impl JobRecord {
    pub fn state(&self) -> JobFsmState {
        *self.history.last().expect("history starts at OfferPosted")
    }
}

#[derive(Debug, Clone)]
pub struct ResourceOfferRecord {
    pub offer: ResourceOffer,
    pub arrival: u64,
    pub escrow: Money,
    pub state: OfferState,
}

#[derive(Debug, Clone)]
pub struct MatchRecord {
    pub id: MatchId,
    pub matched: Match,
    pub job_creator: AccountId,
    pub provider: AccountId,
    pub result: Option<JobResult>,
    pub reaction_deadline: Option<Millis>,
    pub rejection: Option<RejectionReason>,
    pub mediation_deadline: Option<Millis>,
    pub mediation: Option<MediationResult>,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    platform: PlatformParams,
    registry: Registry,
    balances: BTreeMap<AccountId, Money>,
    genesis_total: i128,
    jobs: BTreeMap<JobId, JobRecord>,
    resource_offers: BTreeMap<ResourceOfferId, ResourceOfferRecord>,
    matches: Vec<MatchRecord>,
    open_jobs: BTreeSet<(u64, JobId)>,
    open_resource_offers: BTreeSet<(u64, ResourceOfferId)>,
    escrow_total: Money,
    events: Vec<RecordedEvent>,
    height: u64,
    now: Millis,
    next_event_index: u32,
    next_arrival: u64,
}

impl Ledger {
    /// Creates the ledger with the given funded accounts. The contract sink
    /// always exists and starts empty unless listed.
    pub fn genesis(
        platform: PlatformParams,
        accounts: impl IntoIterator<Item = (AccountId, Money)>,
    ) -> Result<Ledger> {
        platform.validate()?;
        let mut balances = BTreeMap::new();
        balances.insert(AccountId::SINK, Money::ZERO);
        for (id, amount) in accounts {
            if amount.is_negative() {
                return Err(LedgerError::InsufficientBalance {
                    account: id,
                    needed: Money::ZERO,
                    available: amount,
                });
            }
            let slot = balances.entry(id).or_insert(Money::ZERO);
            *slot = slot.checked_add(amount)?;
        }
        let genesis_total = money::total(balances.values().copied());
        Ok(Ledger {
            platform,
            registry: Registry::default(),
            balances,
            genesis_total,
            jobs: BTreeMap::new(),
            resource_offers: BTreeMap::new(),
            matches: Vec::new(),
            open_jobs: BTreeSet::new(),
            open_resource_offers: BTreeSet::new(),
            escrow_total: Money::ZERO,
            events: Vec::new(),
            height: 0,
            now: 0,
            next_event_index: 0,
            next_arrival: 0,
        })
    }

    // ----- queries -------------------------------------------------------

    pub fn platform(&self) -> &PlatformParams {
        &self.platform
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn balance(&self, id: AccountId) -> Money {
        self.balances.get(&id).copied().unwrap_or(Money::ZERO)
    }

    pub fn balances(&self) -> &BTreeMap<AccountId, Money> {
        &self.balances
    }

    pub fn events(&self) -> &[RecordedEvent] {
        &self.events
    }

    pub fn job(&self, id: JobId) -> Option<&JobRecord> {
        self.jobs.get(&id)
    }

    pub fn jobs(&self) -> impl Iterator<Item = &JobRecord> {
        self.jobs.values()
    }

    pub fn resource_offer(&self, id: ResourceOfferId) -> Option<&ResourceOfferRecord> {
        self.resource_offers.get(&id)
    }

    pub fn get_match(&self, id: MatchId) -> Option<&MatchRecord> {
        self.matches.get(id.0 as usize)
    }

    pub fn escrow_total(&self) -> Money {
        self.escrow_total
    }

    pub fn genesis_total(&self) -> i128 {
        self.genesis_total
    }

    /// Open job offers in arrival order.
    pub fn pending_job_offers(&self) -> Vec<Pending<'_, JobOffer>> {
        self.open_jobs
            .iter()
            .map(|(arrival, id)| Pending {
                arrival: *arrival,
                offer: &self.jobs[id].offer,
            })
            .collect()
    }

    /// Open resource offers in arrival order.
    pub fn pending_resource_offers(&self) -> Vec<Pending<'_, ResourceOffer>> {
        self.open_resource_offers
            .iter()
            .map(|(arrival, id)| Pending {
                arrival: *arrival,
                offer: &self.resource_offers[id].offer,
            })
            .collect()
    }

    /// Genesis total minus everything currently held. Cheap form using the
    /// running escrow counter.
    pub fn conservation_residual(&self) -> i128 {
        self.genesis_total
            - money::total(self.balances.values().copied())
            - self.escrow_total.amount() as i128
    }

    /// Same as [`Ledger::conservation_residual`] but recomputes escrow from
    /// every offer record.
    pub fn audited_conservation_residual(&self) -> i128 {
        let escrow = money::total(
            self.jobs
                .values()
                .map(|j| j.escrow)
                .chain(self.resource_offers.values().map(|r| r.escrow)),
        );
        self.genesis_total - money::total(self.balances.values().copied()) - escrow
    }

    /// The job price used when settling this match: reported usage clamped to
    /// the job's limits, at the provider's ask prices. Falls back to the
    /// creator's estimate when no result exists.
    pub fn settlement_price(&self, id: MatchId) -> Result<Money> {
        let m = self.get_match(id).ok_or(LedgerError::UnknownMatch(id))?;
        let job = &self.jobs[&m.matched.job];
        match &m.result {
            Some(result) => {
                let ro = &self.resource_offers[&m.matched.resource_offer].offer;
                let usage = result.usage.clamp_to(&job.offer.limits);
                Ok(priced_usage(
                    &usage,
                    ro.instruction_price,
                    ro.bandwidth_price,
                )?)
            }
            None => Ok(job.offer.price_estimate()?),
        }
    }

    // ----- time ----------------------------------------------------------

    /// Starts a new block at `now`. Time never moves backwards.
    pub fn advance_block(&mut self, now: Millis) {
        self.height += 1;
        self.now = self.now.max(now);
        self.next_event_index = 0;
    }

    // ----- dispatch ------------------------------------------------------

    pub fn apply(&mut self, caller: AccountId, call: Call) -> Result<LedgerEvent> {
        match call {
            Call::RegisterJobCreator(p) => self.register_job_creator(caller, p),
            Call::RegisterResourceProvider(p) => self.register_resource_provider(caller, p),
            Call::RegisterMediator(p) => self.register_mediator(caller, p),
            Call::PostJobOffer(o) => self.post_job_offer(caller, o),
            Call::PostResourceOffer(o) => self.post_resource_offer(caller, o),
            Call::CancelOffer(r) => self.cancel_offer(caller, r),
            Call::PostMatch(m) => self.post_match(caller, m),
            Call::PostResult(r) => self.post_result(caller, r),
            Call::AcceptResult(id) => self.accept_result(caller, id),
            Call::RejectResult(id, reason) => self.reject_result(caller, id, reason),
            Call::PostMediationResult(mr) => self.post_mediation_result(caller, mr),
            Call::Timeout(id) => self.timeout(caller, id),
        }
    }

    // ----- internals -----------------------------------------------------

    fn emit(&mut self, event: LedgerEvent) -> LedgerEvent {
        self.events.push(RecordedEvent {
            block: self.height,
            index: self.next_event_index,
            event: event.clone(),
        });
        self.next_event_index += 1;
        event
    }

    fn require_funds(&self, account: AccountId, needed: Money) -> Result<()> {
        let available = self.balance(account);
        if available < needed {
            return Err(LedgerError::InsufficientBalance {
                account,
                needed,
                available,
            });
        }
        Ok(())
    }

    /// Moves `amount` between accounts. Callers check funds first.
    fn transfer(&mut self, from: AccountId, to: AccountId, amount: Money) -> Result<()> {
        let src = self.balance(from).checked_sub(amount)?;
        let dst = self.balance(to).checked_add(amount)?;
        self.balances.insert(from, src);
        self.balances.insert(to, dst);
        Ok(())
    }

    fn credit(&mut self, to: AccountId, amount: Money) -> Result<()> {
        let dst = self.balance(to).checked_add(amount)?;
        self.balances.insert(to, dst);
        Ok(())
    }

    fn lock_escrow(&mut self, from: AccountId, amount: Money) -> Result<()> {
        let src = self.balance(from).checked_sub(amount)?;
        let total = self.escrow_total.checked_add(amount)?;
        self.balances.insert(from, src);
        self.escrow_total = total;
        Ok(())
    }

    fn next_arrival(&mut self) -> u64 {
        let a = self.next_arrival;
        self.next_arrival += 1;
        a
    }

    fn push_state(&mut self, job: JobId, next: JobFsmState) {
        let record = self.jobs.get_mut(&job).expect("job exists");
        debug_assert!(record.state().can_transition_to(next));
        record.history.push(next);
    }

    fn match_checked(&self, id: MatchId) -> Result<&MatchRecord> {
        self.get_match(id).ok_or(LedgerError::UnknownMatch(id))
    }

    /// Releases both escrows of a finished match according to `payouts`,
    /// which must account for every escrowed unit.
    fn release(&mut self, m: MatchId, payouts: Payouts) -> Result<()> {
        let record = &self.matches[m.0 as usize];
        let (job, ro) = (record.matched.job, record.matched.resource_offer);
        let (jc, rp, mediator) = (record.job_creator, record.provider, record.matched.mediator);
        let held = self.jobs[&job]
            .escrow
            .checked_add(self.resource_offers[&ro].escrow)?;
        let paid = payouts
            .job_creator
            .checked_add(payouts.resource_provider)?
            .checked_add(payouts.mediator)?
            .checked_add(payouts.sink)?;
        assert_eq!(held, paid, "settlement must release exactly the escrow");

        self.credit(jc, payouts.job_creator)?;
        self.credit(rp, payouts.resource_provider)?;
        self.credit(mediator, payouts.mediator)?;
        self.credit(AccountId::SINK, payouts.sink)?;
        self.escrow_total = self.escrow_total.checked_sub(held)?;
        self.jobs.get_mut(&job).expect("job").escrow = Money::ZERO;
        self.resource_offers.get_mut(&ro).expect("offer").escrow = Money::ZERO;
        Ok(())
    }

    fn escrows(&self, m: &MatchRecord) -> (Money, Money) {
        (
            self.jobs[&m.matched.job].escrow,
            self.resource_offers[&m.matched.resource_offer].escrow,
        )
    }

    fn shortfall(required: Money, offered: Money) -> LedgerError {
        LedgerError::InsufficientDeposit { required, offered }
    }

    // ----- registration --------------------------------------------------

    pub fn register_job_creator(
        &mut self,
        caller: AccountId,
        profile: JobCreatorProfile,
    ) -> Result<LedgerEvent> {
        if caller.role != Role::JobCreator {
            return Err(LedgerError::UnregisteredActor(caller));
        }
        if self.registry.job_creators.contains_key(&caller) {
            return Err(LedgerError::AlreadyRegistered(caller));
        }
        self.registry.job_creators.insert(caller, profile);
        Ok(self.emit(LedgerEvent::JobCreatorRegistered { account: caller }))
    }

    pub fn register_resource_provider(
        &mut self,
        caller: AccountId,
        profile: ResourceProviderProfile,
    ) -> Result<LedgerEvent> {
        if caller.role != Role::ResourceProvider {
            return Err(LedgerError::UnregisteredActor(caller));
        }
        if self.registry.resource_providers.contains_key(&caller) {
            return Err(LedgerError::AlreadyRegistered(caller));
        }
        self.registry.resource_providers.insert(caller, profile);
        Ok(self.emit(LedgerEvent::ResourceProviderRegistered { account: caller }))
    }

    pub fn register_mediator(
        &mut self,
        caller: AccountId,
        profile: MediatorProfile,
    ) -> Result<LedgerEvent> {
        if caller.role != Role::Mediator {
            return Err(LedgerError::UnregisteredActor(caller));
        }
        if self.registry.mediators.contains_key(&caller) {
            return Err(LedgerError::AlreadyRegistered(caller));
        }
        self.registry.mediators.insert(caller, profile);
        Ok(self.emit(LedgerEvent::MediatorRegistered { account: caller }))
    }

    // ----- offers --------------------------------------------------------

    pub fn post_job_offer(&mut self, caller: AccountId, offer: JobOffer) -> Result<LedgerEvent> {
        if caller.role != Role::JobCreator || !self.registry.job_creators.contains_key(&caller) {
            return Err(LedgerError::UnregisteredActor(caller));
        }
        if offer.job_creator != caller {
            return Err(LedgerError::NotOwner);
        }
        if self.jobs.contains_key(&offer.job_id) {
            return Err(LedgerError::DuplicateJob(offer.job_id));
        }
        if offer.limits.instructions == 0 || offer.limits.bandwidth == 0 {
            return Err(LedgerError::InvalidOffer(
                "instruction and bandwidth limits must be positive",
            ));
        }
        if offer.instruction_max_price <= Money::ZERO || offer.bandwidth_max_price <= Money::ZERO {
            return Err(LedgerError::InvalidOffer("maximum prices must be positive"));
        }
        if offer.match_incentive.is_negative() {
            return Err(LedgerError::InvalidOffer(
                "match incentive must be non-negative",
            ));
        }
        let required = self
            .platform
            .job_offer_min_deposit(&offer)?
            .checked_add(offer.match_incentive)?;
        if offer.deposit < required {
            return Err(Self::shortfall(required, offer.deposit));
        }
        let fee = self.platform.jc_fee;
        self.require_funds(caller, offer.deposit.checked_add(fee)?)?;

        self.lock_escrow(caller, offer.deposit)?;
        self.transfer(caller, AccountId::SINK, fee)?;
        let arrival = self.next_arrival();
        let (job, deposit) = (offer.job_id, offer.deposit);
        self.open_jobs.insert((arrival, job));
        self.jobs.insert(
            job,
            JobRecord {
                offer,
                arrival,
                escrow: deposit,
                history: vec![JobFsmState::OfferPosted],
                match_id: None,
            },
        );
        Ok(self.emit(LedgerEvent::JobOfferPosted {
            job,
            creator: caller,
            deposit,
        }))
    }

    pub fn post_resource_offer(
        &mut self,
        caller: AccountId,
        offer: ResourceOffer,
    ) -> Result<LedgerEvent> {
        if caller.role != Role::ResourceProvider
            || !self.registry.resource_providers.contains_key(&caller)
        {
            return Err(LedgerError::UnregisteredActor(caller));
        }
        if offer.provider != caller {
            return Err(LedgerError::NotOwner);
        }
        if self.resource_offers.contains_key(&offer.offer_id) {
            return Err(LedgerError::DuplicateResourceOffer(offer.offer_id));
        }
        if offer.instruction_price <= Money::ZERO || offer.bandwidth_price <= Money::ZERO {
            return Err(LedgerError::InvalidOffer("ask prices must be positive"));
        }
        if offer.match_incentive.is_negative() {
            return Err(LedgerError::InvalidOffer(
                "match incentive must be non-negative",
            ));
        }
        let required = self
            .platform
            .resource_offer_min_deposit(&offer)?
            .checked_add(offer.match_incentive)?;
        if offer.deposit < required {
            return Err(Self::shortfall(required, offer.deposit));
        }
        let fee = self.platform.rp_fee;
        self.require_funds(caller, offer.deposit.checked_add(fee)?)?;

        self.lock_escrow(caller, offer.deposit)?;
        self.transfer(caller, AccountId::SINK, fee)?;
        let arrival = self.next_arrival();
        let (id, deposit) = (offer.offer_id, offer.deposit);
        self.open_resource_offers.insert((arrival, id));
        self.resource_offers.insert(
            id,
            ResourceOfferRecord {
                offer,
                arrival,
                escrow: deposit,
                state: OfferState::Posted,
            },
        );
        Ok(self.emit(LedgerEvent::ResourceOfferPosted {
            offer: id,
            provider: caller,
            deposit,
        }))
    }

    /// Refunds the full deposit of an unmatched offer.
    pub fn cancel_offer(&mut self, caller: AccountId, offer: OfferRef) -> Result<LedgerEvent> {
        match offer {
            OfferRef::Job(id) => {
                let record = self.jobs.get(&id).ok_or(LedgerError::UnknownJob(id))?;
                if record.offer.job_creator != caller {
                    return Err(LedgerError::NotOwner);
                }
                match record.state() {
                    JobFsmState::OfferPosted => {}
                    JobFsmState::Canceled => {
                        return Err(LedgerError::WrongState(JobFsmState::Canceled))
                    }
                    _ => return Err(LedgerError::AlreadyMatched),
                }
                let (refund, arrival) = (record.escrow, record.arrival);
                self.credit(caller, refund)?;
                self.escrow_total = self.escrow_total.checked_sub(refund)?;
                self.jobs.get_mut(&id).expect("job").escrow = Money::ZERO;
                self.open_jobs.remove(&(arrival, id));
                self.push_state(id, JobFsmState::Canceled);
                Ok(self.emit(LedgerEvent::JobOfferCanceled { job: id, refund }))
            }
            OfferRef::Resource(id) => {
                let record = self
                    .resource_offers
                    .get(&id)
                    .ok_or(LedgerError::UnknownResourceOffer(id))?;
                if record.offer.provider != caller {
                    return Err(LedgerError::NotOwner);
                }
                match record.state {
                    OfferState::Posted => {}
                    OfferState::Canceled => {
                        return Err(LedgerError::StaleOffer(OfferState::Canceled))
                    }
                    OfferState::Matched => return Err(LedgerError::AlreadyMatched),
                }
                let (refund, arrival) = (record.escrow, record.arrival);
                self.credit(caller, refund)?;
                self.escrow_total = self.escrow_total.checked_sub(refund)?;
                let record = self.resource_offers.get_mut(&id).expect("offer");
                record.escrow = Money::ZERO;
                record.state = OfferState::Canceled;
                self.open_resource_offers.remove(&(arrival, id));
                Ok(self.emit(LedgerEvent::ResourceOfferCanceled { offer: id, refund }))
            }
        }
    }

    // ----- matching ------------------------------------------------------

    pub fn post_match(&mut self, solver: AccountId, m: Match) -> Result<LedgerEvent> {
        let job = self
            .jobs
            .get(&m.job)
            .ok_or(LedgerError::UnknownJob(m.job))?;
        let ro = self
            .resource_offers
            .get(&m.resource_offer)
            .ok_or(LedgerError::UnknownResourceOffer(m.resource_offer))?;
        if job.state() != JobFsmState::OfferPosted {
            return Err(LedgerError::StaleJob(job.state()));
        }
        if ro.state != OfferState::Posted {
            return Err(LedgerError::StaleOffer(ro.state));
        }
        let report = check_feasible(&job.offer, &ro.offer, &self.registry, self.now);
        if !report.feasible {
            return Err(LedgerError::Infeasible(report.violations));
        }
        if !eligible_mediators(&job.offer, &ro.offer, &self.registry).contains(&m.mediator) {
            return Err(LedgerError::Infeasible(vec![Violation::Mediator]));
        }

        let jo_incentive = job.offer.match_incentive;
        let ro_incentive = ro.offer.match_incentive;
        let solver_payment = jo_incentive.checked_add(ro_incentive)?;
        let job_escrow = job.escrow.checked_sub(jo_incentive)?;
        let ro_escrow = ro.escrow.checked_sub(ro_incentive)?;
        let (job_arrival, ro_arrival) = (job.arrival, ro.arrival);
        let (jc, rp) = (job.offer.job_creator, ro.offer.provider);

        self.credit(solver, solver_payment)?;
        self.escrow_total = self.escrow_total.checked_sub(solver_payment)?;
        let id = MatchId(self.matches.len() as u64);
        let matched = Match {
            match_time: self.now,
            ..m
        };
        let (job_id, ro_id, mediator) = (matched.job, matched.resource_offer, matched.mediator);
        {
            let jr = self.jobs.get_mut(&job_id).expect("job");
            jr.escrow = job_escrow;
            jr.match_id = Some(id);
        }
        {
            let rr = self.resource_offers.get_mut(&ro_id).expect("offer");
            rr.escrow = ro_escrow;
            rr.state = OfferState::Matched;
        }
        self.open_jobs.remove(&(job_arrival, job_id));
        self.open_resource_offers.remove(&(ro_arrival, ro_id));
        self.push_state(job_id, JobFsmState::Matched);
        self.matches.push(MatchRecord {
            id,
            matched,
            job_creator: jc,
            provider: rp,
            result: None,
            reaction_deadline: None,
            rejection: None,
            mediation_deadline: None,
            mediation: None,
        });
        Ok(self.emit(LedgerEvent::Matched {
            match_id: id,
            job: job_id,
            offer: ro_id,
            mediator,
            solver,
            solver_payment,
        }))
    }

    // ----- results -------------------------------------------------------

    pub fn post_result(&mut self, caller: AccountId, result: JobResult) -> Result<LedgerEvent> {
        let m = self.match_checked(result.match_id)?;
        if caller != m.provider {
            return Err(LedgerError::NotMatchedProvider);
        }
        let job = &self.jobs[&m.matched.job];
        if job.state() != JobFsmState::Matched {
            return Err(LedgerError::WrongState(job.state()));
        }
        if self.now > job.offer.completion_deadline {
            return Err(LedgerError::PastDeadline);
        }
        let limits = &job.offer.limits;
        if result.status == ResultStatus::Completed
            && (result.usage.instructions > limits.instructions
                || result.usage.bandwidth > limits.bandwidth)
        {
            return Err(LedgerError::UsageExceedsLimits);
        }
        let (id, job_id) = (m.id, m.matched.job);
        let status = result.status;
        let deadline = self.now.saturating_add(self.platform.reaction_window_ms);
        {
            let record = &mut self.matches[id.0 as usize];
            record.result = Some(JobResult {
                timestamp: self.now,
                ..result
            });
            record.reaction_deadline = Some(deadline);
        }
        let price = self.settlement_price(id)?;
        self.push_state(job_id, JobFsmState::ResultPosted);
        Ok(self.emit(LedgerEvent::ResultPosted {
            match_id: id,
            job: job_id,
            status,
            price,
        }))
    }

    /// Settles an accepted result. The job creator may accept while the result
    /// is posted; the provider only once the reaction deadline has strictly
    /// passed.
    pub fn accept_result(&mut self, caller: AccountId, id: MatchId) -> Result<LedgerEvent> {
        let m = self.match_checked(id)?;
        let kind = if caller == m.job_creator {
            CloseKind::AcceptedByCreator
        } else if caller == m.provider {
            CloseKind::AcceptedByProvider
        } else {
            return Err(LedgerError::NotParty);
        };
        let state = self.jobs[&m.matched.job].state();
        if state != JobFsmState::ResultPosted {
            return Err(LedgerError::WrongState(state));
        }
        if kind == CloseKind::AcceptedByProvider
            && self.now <= m.reaction_deadline.expect("armed with the result")
        {
            return Err(LedgerError::ReactionWindowOpen);
        }

        let (jc_escrow, rp_escrow) = self.escrows(m);
        let job_id = m.matched.job;
        let price = self.settlement_price(id)?;
        let fee = self.platform.availability_fee;
        let jc_cost = price.checked_add(fee)?;
        let payouts = Payouts {
            job_creator: jc_escrow
                .checked_sub(jc_cost)
                .ok()
                .filter(|v| !v.is_negative())
                .ok_or_else(|| Self::shortfall(jc_cost, jc_escrow))?,
            resource_provider: rp_escrow
                .checked_sub(fee)
                .ok()
                .filter(|v| !v.is_negative())
                .ok_or_else(|| Self::shortfall(fee, rp_escrow))?
                .checked_add(price)?,
            mediator: fee.checked_add(fee)?,
            sink: Money::ZERO,
        };
        self.release(id, payouts)?;
        self.push_state(job_id, JobFsmState::Closed);
        Ok(self.emit(LedgerEvent::MatchClosed {
            match_id: id,
            job: job_id,
            kind,
            payouts,
        }))
    }

    /// Disputes a posted result. Charges the mediation fee and hands the job
    /// to the match's mediator. Allowed up to and including the reaction
    /// deadline.
    pub fn reject_result(
        &mut self,
        caller: AccountId,
        id: MatchId,
        reason: RejectionReason,
    ) -> Result<LedgerEvent> {
        let m = self.match_checked(id)?;
        if caller != m.job_creator {
            return Err(LedgerError::NotJobCreator);
        }
        let state = self.jobs[&m.matched.job].state();
        if state != JobFsmState::ResultPosted {
            return Err(LedgerError::WrongState(state));
        }
        if self.now > m.reaction_deadline.expect("armed with the result") {
            return Err(LedgerError::ReactionWindowClosed);
        }
        let fee = self.platform.mediation_fee;
        self.require_funds(caller, fee)?;
        let (job_id, mediator) = (m.matched.job, m.matched.mediator);

        self.transfer(caller, AccountId::SINK, fee)?;
        let deadline = self.now.saturating_add(self.platform.mediation_window_ms);
        let record = &mut self.matches[id.0 as usize];
        record.rejection = Some(reason);
        record.mediation_deadline = Some(deadline);
        self.push_state(job_id, JobFsmState::MediationRequested);
        Ok(self.emit(LedgerEvent::JobAssignedForMediation {
            match_id: id,
            job: job_id,
            mediator,
        }))
    }

    pub fn post_mediation_result(
        &mut self,
        caller: AccountId,
        mr: MediationResult,
    ) -> Result<LedgerEvent> {
        let m = self.match_checked(mr.match_id)?;
        if caller != m.matched.mediator {
            return Err(LedgerError::NotAssignedMediator);
        }
        let state = self.jobs[&m.matched.job].state();
        if state != JobFsmState::MediationRequested {
            return Err(LedgerError::WrongState(state));
        }
        if !mr.is_consistent() {
            return Err(LedgerError::InvalidMediationResult);
        }

        let (id, job_id) = (m.id, m.matched.job);
        let (jc_escrow, rp_escrow) = self.escrows(m);
        let estimate = self.jobs[&job_id].offer.price_estimate()?;
        let fee = self.platform.availability_fee;
        let mediation_payout = estimate.checked_mul(self.platform.n as u64)?;
        let compensation = match self.platform.compensation {
            Compensation::JobPrice => self.settlement_price(id)?,
            Compensation::Estimate => estimate,
        };
        let (faulty_escrow, wronged_escrow) = match mr.faulty_party {
            Party::JobCreator => (jc_escrow, rp_escrow),
            Party::ResourceProvider => (rp_escrow, jc_escrow),
        };
        let forfeited = faulty_escrow
            .checked_sub(fee)
            .ok()
            .filter(|v| !v.is_negative())
            .ok_or_else(|| Self::shortfall(fee, faulty_escrow))?;
        let wronged_refund = wronged_escrow
            .checked_sub(fee)
            .ok()
            .filter(|v| !v.is_negative())
            .ok_or_else(|| Self::shortfall(fee, wronged_escrow))?;
        // The mediator is paid first; compensation takes what remains.
        let to_mediator = mediation_payout.min(forfeited);
        let to_wronged = compensation.min(forfeited.checked_sub(to_mediator)?);
        let residual = forfeited
            .checked_sub(to_mediator)?
            .checked_sub(to_wronged)?;
        let wronged_total = wronged_refund.checked_add(to_wronged)?;
        let (jc_payout, rp_payout) = match mr.faulty_party {
            Party::JobCreator => (Money::ZERO, wronged_total),
            Party::ResourceProvider => (wronged_total, Money::ZERO),
        };
        let payouts = Payouts {
            job_creator: jc_payout,
            resource_provider: rp_payout,
            mediator: fee.checked_add(fee)?.checked_add(to_mediator)?,
            sink: residual,
        };
        self.release(id, payouts)?;
        let (verdict, faulty) = (mr.verdict, mr.faulty_party);
        self.matches[id.0 as usize].mediation = Some(mr);
        self.push_state(job_id, JobFsmState::Closed);
        self.emit(LedgerEvent::MediationResultPosted {
            match_id: id,
            job: job_id,
            verdict,
            faulty_party: faulty,
        });
        Ok(self.emit(LedgerEvent::MatchClosed {
            match_id: id,
            job: job_id,
            kind: CloseKind::Mediated(faulty),
            payouts,
        }))
    }

    /// Two timeout paths:
    ///
    /// * the provider missed the completion deadline: the creator is paid its
    ///   estimate out of the provider's deposit, everything else is returned;
    /// * the mediator missed the mediation deadline: the provider is paid half
    ///   of the creator's estimate out of the creator's deposit, everything
    ///   else is returned and the mediator gets nothing.
    pub fn timeout(&mut self, caller: AccountId, id: MatchId) -> Result<LedgerEvent> {
        let m = self.match_checked(id)?;
        let job = &self.jobs[&m.matched.job];
        let estimate = job.offer.price_estimate()?;
        let (jc_escrow, rp_escrow) = self.escrows(m);
        let (kind, payouts) = match job.state() {
            JobFsmState::Matched => {
                if caller != m.job_creator {
                    return Err(LedgerError::NotJobCreator);
                }
                if self.now <= job.offer.completion_deadline {
                    return Err(LedgerError::DeadlineNotReached);
                }
                let paid = estimate.min(rp_escrow);
                (
                    TimeoutKind::ProviderMissedDeadline,
                    Payouts {
                        job_creator: jc_escrow.checked_add(paid)?,
                        resource_provider: rp_escrow.checked_sub(paid)?,
                        mediator: Money::ZERO,
                        sink: Money::ZERO,
                    },
                )
            }
            JobFsmState::MediationRequested => {
                if caller != m.job_creator && caller != m.provider {
                    return Err(LedgerError::NotParty);
                }
                if self.now <= m.mediation_deadline.expect("armed on rejection") {
                    return Err(LedgerError::DeadlineNotReached);
                }
                let paid = estimate.div_floor(2).min(jc_escrow);
                (
                    TimeoutKind::MediationFailed,
                    Payouts {
                        job_creator: jc_escrow.checked_sub(paid)?,
                        resource_provider: rp_escrow.checked_add(paid)?,
                        mediator: Money::ZERO,
                        sink: Money::ZERO,
                    },
                )
            }
            other => return Err(LedgerError::WrongState(other)),
        };
        let job_id = m.matched.job;
        self.release(id, payouts)?;
        self.push_state(job_id, JobFsmState::TimedOut);
        Ok(self.emit(LedgerEvent::JobTimedOut {
            match_id: id,
            job: job_id,
            kind,
            payouts,
        }))
    }
}

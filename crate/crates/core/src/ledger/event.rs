//! Append-only event log and its CSV export.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::types::{JobId, MatchId, Party, ResourceOfferId, ResultStatus, Verdict};
use crate::money::Money;
use crate::registry::AccountId;

/// How a match reached `Closed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CloseKind {
    /// The job creator accepted.
    AcceptedByCreator,
    /// The provider accepted after the creator's reaction window closed.
    AcceptedByProvider,
    /// Closed by a mediation verdict against the given party.
    Mediated(Party),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeoutKind {
    /// The provider never posted a result before the completion deadline.
    ProviderMissedDeadline,
    /// The mediator never posted a verdict before the mediation deadline.
    MediationFailed,
}

/// Net amounts released from escrow when a job finishes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payouts {
    pub job_creator: Money,
    pub resource_provider: Money,
    pub mediator: Money,
    pub sink: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LedgerEvent {
    JobCreatorRegistered {
        account: AccountId,
    },
    ResourceProviderRegistered {
        account: AccountId,
    },
    MediatorRegistered {
        account: AccountId,
    },
    JobOfferPosted {
        job: JobId,
        creator: AccountId,
        deposit: Money,
    },
    ResourceOfferPosted {
        offer: ResourceOfferId,
        provider: AccountId,
        deposit: Money,
    },
    JobOfferCanceled {
        job: JobId,
        refund: Money,
    },
    ResourceOfferCanceled {
        offer: ResourceOfferId,
        refund: Money,
    },
    Matched {
        match_id: MatchId,
        job: JobId,
        offer: ResourceOfferId,
        mediator: AccountId,
        solver: AccountId,
        solver_payment: Money,
    },
    ResultPosted {
        match_id: MatchId,
        job: JobId,
        status: ResultStatus,
        price: Money,
    },
    JobAssignedForMediation {
        match_id: MatchId,
        job: JobId,
        mediator: AccountId,
    },
    MediationResultPosted {
        match_id: MatchId,
        job: JobId,
        verdict: Verdict,
        faulty_party: Party,
    },
    MatchClosed {
        match_id: MatchId,
        job: JobId,
        kind: CloseKind,
        payouts: Payouts,
    },
    JobTimedOut {
        match_id: MatchId,
        job: JobId,
        kind: TimeoutKind,
        payouts: Payouts,
    },
}

impl LedgerEvent {
    pub fn name(&self) -> &'static str {
        match self {
            LedgerEvent::JobCreatorRegistered { .. } => "JobCreatorRegistered",
            LedgerEvent::ResourceProviderRegistered { .. } => "ResourceProviderRegistered",
            LedgerEvent::MediatorRegistered { .. } => "MediatorRegistered",
            LedgerEvent::JobOfferPosted { .. } => "JobOfferPosted",
            LedgerEvent::ResourceOfferPosted { .. } => "ResourceOfferPosted",
            LedgerEvent::JobOfferCanceled { .. } => "JobOfferCanceled",
            LedgerEvent::ResourceOfferCanceled { .. } => "ResourceOfferCanceled",
            LedgerEvent::Matched { .. } => "Matched",
            LedgerEvent::ResultPosted { .. } => "ResultPosted",
            LedgerEvent::JobAssignedForMediation { .. } => "JobAssignedForMediation",
            LedgerEvent::MediationResultPosted { .. } => "MediationResultPosted",
            LedgerEvent::MatchClosed { .. } => "MatchClosed",
            LedgerEvent::JobTimedOut { .. } => "JobTimedOut",
        }
    }

    /// The job this event concerns, if any.
    pub fn job(&self) -> Option<JobId> {
        match self {
            LedgerEvent::JobOfferPosted { job, .. }
            | LedgerEvent::JobOfferCanceled { job, .. }
            | LedgerEvent::Matched { job, .. }
            | LedgerEvent::ResultPosted { job, .. }
            | LedgerEvent::JobAssignedForMediation { job, .. }
            | LedgerEvent::MediationResultPosted { job, .. }
            | LedgerEvent::MatchClosed { job, .. }
            | LedgerEvent::JobTimedOut { job, .. } => Some(*job),
            _ => None,
        }
    }

    /// Space-separated `key=value` pairs for the CSV `fields` column.
    pub fn fields(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        // Writing to a String cannot fail.
        let _ = match self {
            LedgerEvent::JobCreatorRegistered { account }
            | LedgerEvent::ResourceProviderRegistered { account }
            | LedgerEvent::MediatorRegistered { account } => write!(w, "account={account}"),
            LedgerEvent::JobOfferPosted {
                creator, deposit, ..
            } => write!(w, "creator={creator} deposit={deposit}"),
            LedgerEvent::ResourceOfferPosted {
                offer,
                provider,
                deposit,
            } => write!(w, "offer={offer} provider={provider} deposit={deposit}"),
            LedgerEvent::JobOfferCanceled { refund, .. } => write!(w, "refund={refund}"),
            LedgerEvent::ResourceOfferCanceled { offer, refund } => {
                write!(w, "offer={offer} refund={refund}")
            }
            LedgerEvent::Matched {
                match_id,
                offer,
                mediator,
                solver,
                solver_payment,
                ..
            } => write!(
                w,
                "match={match_id} offer={offer} mediator={mediator} solver={solver} solver_payment={solver_payment}"
            ),
            LedgerEvent::ResultPosted {
                match_id,
                status,
                price,
                ..
            } => write!(w, "match={match_id} status={status} price={price}"),
            LedgerEvent::JobAssignedForMediation {
                match_id, mediator, ..
            } => write!(w, "match={match_id} mediator={mediator}"),
            LedgerEvent::MediationResultPosted {
                match_id,
                verdict,
                faulty_party,
                ..
            } => write!(w, "match={match_id} verdict={verdict} faulty={faulty_party}"),
            LedgerEvent::MatchClosed {
                match_id,
                kind,
                payouts,
                ..
            } => {
                let kind = match kind {
                    CloseKind::AcceptedByCreator => "accepted_by_jc".to_string(),
                    CloseKind::AcceptedByProvider => "accepted_by_rp".to_string(),
                    CloseKind::Mediated(p) => format!("mediated_faulty_{p}"),
                };
                write!(w, "match={match_id} kind={kind} ")
                    .and_then(|_| write_payouts(w, payouts))
            }
            LedgerEvent::JobTimedOut {
                match_id,
                kind,
                payouts,
                ..
            } => {
                let kind = match kind {
                    TimeoutKind::ProviderMissedDeadline => "provider_missed_deadline",
                    TimeoutKind::MediationFailed => "mediation_failed",
                };
                write!(w, "match={match_id} kind={kind} ").and_then(|_| write_payouts(w, payouts))
            }
        };
        s
    }
}

fn write_payouts(w: &mut String, p: &Payouts) -> std::fmt::Result {
    write!(
        w,
        "jc={} rp={} mediator={} sink={}",
        p.job_creator, p.resource_provider, p.mediator, p.sink
    )
}

/// An event with its position in the total order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedEvent {
    pub block: u64,
    pub index: u32,
    pub event: LedgerEvent,
}

pub const EVENT_CSV_HEADER: &str = "block,index,event,job_id,fields";

/// Writes `block,index,event,job_id,fields` rows with a header line.
/// `job_id` is empty for events without a job; `fields` never contains commas.
pub fn write_event_csv<W: Write>(mut out: W, events: &[RecordedEvent]) -> io::Result<()> {
    writeln!(out, "{EVENT_CSV_HEADER}")?;
    for e in events {
        let job = e.event.job().map(|j| j.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            e.block,
            e.index,
            e.event.name(),
            job,
            e.event.fields()
        )?;
    }
    Ok(())
}

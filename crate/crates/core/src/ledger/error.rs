use thiserror::Error;

use super::types::{JobFsmState, JobId, MatchId, OfferState, ResourceOfferId};
use crate::matching::Violation;
use crate::money::{Money, MoneyOverflow};
use crate::registry::AccountId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("account {0} is not registered for this role")]
    UnregisteredActor(AccountId),
    #[error("account {0} is already registered")]
    AlreadyRegistered(AccountId),
    #[error("deposit {offered} is below the required minimum {required}")]
    InsufficientDeposit { required: Money, offered: Money },
    #[error("account {account} needs {needed} but holds {available}")]
    InsufficientBalance {
        account: AccountId,
        needed: Money,
        available: Money,
    },
    #[error("malformed offer: {0}")]
    InvalidOffer(&'static str),
    #[error("invalid platform parameter: {0}")]
    InvalidPlatform(&'static str),
    #[error("job {0} already exists")]
    DuplicateJob(JobId),
    #[error("resource offer {0} already exists")]
    DuplicateResourceOffer(ResourceOfferId),
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("unknown resource offer {0}")]
    UnknownResourceOffer(ResourceOfferId),
    #[error("unknown match {0}")]
    UnknownMatch(MatchId),
    #[error("caller does not own the offer")]
    NotOwner,
    #[error("offer is already matched")]
    AlreadyMatched,
    #[error("operation not allowed in state {0}")]
    WrongState(JobFsmState),
    #[error("resource offer is not open ({0:?})")]
    StaleOffer(OfferState),
    #[error("job offer is not open ({0})")]
    StaleJob(JobFsmState),
    #[error("match is infeasible: {0:?}")]
    Infeasible(Vec<Violation>),
    #[error("caller is not the matched resource provider")]
    NotMatchedProvider,
    #[error("completion deadline has passed; use the timeout path")]
    PastDeadline,
    #[error("reported usage exceeds the job limits for a Completed result")]
    UsageExceedsLimits,
    #[error("job creator's reaction window is still open")]
    ReactionWindowOpen,
    #[error("job creator's reaction window has closed")]
    ReactionWindowClosed,
    #[error("caller is not a party to this match")]
    NotParty,
    #[error("caller is not the job creator")]
    NotJobCreator,
    #[error("caller is not the mediator assigned to this match")]
    NotAssignedMediator,
    #[error("mediation result is inconsistent with its verdict")]
    InvalidMediationResult,
    #[error("deadline has not been reached")]
    DeadlineNotReached,
    #[error(transparent)]
    Overflow(#[from] MoneyOverflow),
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::money::{Money, MoneyOverflow};
use crate::registry::{AccountId, Architecture, DirectoryId};

/// Simulated wall-clock time in milliseconds.
pub type Millis = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceOfferId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatchId(pub u64);

/// Opaque content hash of a job result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResultHash(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ResourceOfferId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for MatchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ResultHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Resource quantities: job limits, provider capacities, or measured usage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceVector {
    pub instructions: u64,
    /// Bytes transferred.
    pub bandwidth: u64,
    /// Bytes.
    pub ram: u64,
    /// Bytes.
    pub storage: u64,
}

impl ResourceVector {
    pub const fn new(instructions: u64, bandwidth: u64, ram: u64, storage: u64) -> Self {
        ResourceVector {
            instructions,
            bandwidth,
            ram,
            storage,
        }
    }

    /// Componentwise `self <= other`.
    pub fn fits_within(&self, other: &ResourceVector) -> bool {
        self.instructions <= other.instructions
            && self.bandwidth <= other.bandwidth
            && self.ram <= other.ram
            && self.storage <= other.storage
    }

    pub fn clamp_to(&self, limits: &ResourceVector) -> ResourceVector {
        ResourceVector {
            instructions: self.instructions.min(limits.instructions),
            bandwidth: self.bandwidth.min(limits.bandwidth),
            ram: self.ram.min(limits.ram),
            storage: self.storage.min(limits.storage),
        }
    }
}

/// `instructions * instruction_price + bandwidth * bandwidth_price`.
pub fn priced_usage(
    usage: &ResourceVector,
    instruction_price: Money,
    bandwidth_price: Money,
) -> Result<Money, MoneyOverflow> {
    instruction_price
        .checked_mul(usage.instructions)?
        .checked_add(bandwidth_price.checked_mul(usage.bandwidth)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobOffer {
    /// Chosen by the job creator; must be unique on the ledger.
    pub job_id: JobId,
    pub job_creator: AccountId,
    pub limits: ResourceVector,
    pub instruction_max_price: Money,
    pub bandwidth_max_price: Money,
    pub completion_deadline: Millis,
    pub match_incentive: Money,
    pub first_layer_hash: u64,
    pub directory: DirectoryId,
    pub job_hash: u64,
    pub arch: Architecture,
    pub deposit: Money,
}

impl JobOffer {
    /// The creator's upper estimate of the job price (π̂_c).
    pub fn price_estimate(&self) -> Result<Money, MoneyOverflow> {
        priced_usage(
            &self.limits,
            self.instruction_max_price,
            self.bandwidth_max_price,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceOffer {
    /// Chosen by the provider; must be unique on the ledger.
    pub offer_id: ResourceOfferId,
    pub provider: AccountId,
    pub capacities: ResourceVector,
    pub instruction_price: Money,
    pub bandwidth_price: Money,
    pub match_incentive: Money,
    /// Carried for completeness; mediation replication uses the platform's `n`.
    pub verification_count: u32,
    pub deposit: Money,
}

impl ResourceOffer {
    /// Value of the full advertised capacity at the ask prices.
    pub fn price_estimate(&self) -> Result<Money, MoneyOverflow> {
        priced_usage(
            &self.capacities,
            self.instruction_price,
            self.bandwidth_price,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub job: JobId,
    pub resource_offer: ResourceOfferId,
    pub mediator: AccountId,
    pub match_time: Millis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResultStatus {
    Completed,
    Declined,
    JobDescriptionError,
    JobNotFound,
    MemoryExceeded,
    StorageExceeded,
    InstructionsExceeded,
    BandwidthExceeded,
    ExceptionOccured,
    DirectoryUnavailable,
}

impl ResultStatus {
    pub const ALL: [ResultStatus; 10] = [
        ResultStatus::Completed,
        ResultStatus::Declined,
        ResultStatus::JobDescriptionError,
        ResultStatus::JobNotFound,
        ResultStatus::MemoryExceeded,
        ResultStatus::StorageExceeded,
        ResultStatus::InstructionsExceeded,
        ResultStatus::BandwidthExceeded,
        ResultStatus::ExceptionOccured,
        ResultStatus::DirectoryUnavailable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResultStatus::Completed => "Completed",
            ResultStatus::Declined => "Declined",
            ResultStatus::JobDescriptionError => "JobDescriptionError",
            ResultStatus::JobNotFound => "JobNotFound",
            ResultStatus::MemoryExceeded => "MemoryExceeded",
            ResultStatus::StorageExceeded => "StorageExceeded",
            ResultStatus::InstructionsExceeded => "InstructionsExceeded",
            ResultStatus::BandwidthExceeded => "BandwidthExceeded",
            ResultStatus::ExceptionOccured => "ExceptionOccured",
            ResultStatus::DirectoryUnavailable => "DirectoryUnavailable",
        }
    }
}

impl fmt::Display for ResultStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResultStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResultStatus::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown result status `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobResult {
    pub match_id: MatchId,
    pub status: ResultStatus,
    pub result_hash: ResultHash,
    pub usage: ResourceVector,
    pub uri: String,
    pub timestamp: Millis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    ResourceProvider,
    JobCreator,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::ResourceProvider => "ResourceProvider",
            Party::JobCreator => "JobCreator",
        })
    }
}

/// Why the mediator faulted a party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    ResultNotFound,
    TooMuchCost,
    WrongResults,
    CorrectResults,
    InvalidResultStatus,
    /// Replicated executions disagreed or produced an anomalous result.
    NonDeterministic,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ResultNotFound => "ResultNotFound",
            Verdict::TooMuchCost => "TooMuchCost",
            Verdict::WrongResults => "WrongResults",
            Verdict::CorrectResults => "CorrectResults",
            Verdict::InvalidResultStatus => "InvalidResultStatus",
            Verdict::NonDeterministic => "NonDeterministic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediationResult {
    pub match_id: MatchId,
    pub verdict: Verdict,
    pub faulty_party: Party,
    pub usage: ResourceVector,
    pub result_hash: ResultHash,
}

impl MediationResult {
    /// Verdicts that clear the provider can only fault the job creator.
    pub fn is_consistent(&self) -> bool {
        match self.verdict {
            Verdict::CorrectResults | Verdict::NonDeterministic => {
                self.faulty_party == Party::JobCreator
            }
            _ => true,
        }
    }
}

/// Lifecycle of a job offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JobFsmState {
    OfferPosted,
    Canceled,
    Matched,
    ResultPosted,
    MediationRequested,
    Closed,
    TimedOut,
}

impl JobFsmState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            JobFsmState::Closed | JobFsmState::Canceled | JobFsmState::TimedOut
        )
    }

    /// The job state machine's edge relation.
    pub fn can_transition_to(self, next: JobFsmState) -> bool {
        use JobFsmState::*;
        matches!(
            (self, next),
            (OfferPosted, Canceled)
                | (OfferPosted, Matched)
                | (Matched, ResultPosted)
                | (Matched, TimedOut)
                | (ResultPosted, Closed)
                | (ResultPosted, MediationRequested)
                | (MediationRequested, Closed)
                | (MediationRequested, TimedOut)
        )
    }
}

impl fmt::Display for JobFsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// State of a resource offer; once matched it follows its job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OfferState {
    Posted,
    Canceled,
    Matched,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exactly_ten_statuses_round_trip() {
        assert_eq!(ResultStatus::ALL.len(), 10);
        for s in ResultStatus::ALL {
            assert_eq!(s.as_str().parse::<ResultStatus>(), Ok(s));
            let v = toml::Value::try_from(s).unwrap();
            assert_eq!(v.try_into::<ResultStatus>().unwrap(), s);
        }
    }

    #[test]
    fn verdict_consistency() {
        let mut mr = MediationResult {
            match_id: MatchId(0),
            verdict: Verdict::CorrectResults,
            faulty_party: Party::ResourceProvider,
            usage: ResourceVector::default(),
            result_hash: ResultHash(0),
        };
        assert!(!mr.is_consistent());
        mr.faulty_party = Party::JobCreator;
        assert!(mr.is_consistent());
        mr.verdict = Verdict::WrongResults;
        mr.faulty_party = Party::ResourceProvider;
        assert!(mr.is_consistent());
    }

    #[test]
    fn terminal_states_have_no_exits() {
        use JobFsmState::*;
        let all = [
            OfferPosted,
            Canceled,
            Matched,
            ResultPosted,
            MediationRequested,
            Closed,
            TimedOut,
        ];
        for s in all.into_iter().filter(|s| s.is_terminal()) {
            assert!(all.iter().all(|&t| !s.can_transition_to(t)));
        }
    }

    proptest! {
        #[test]
        fn job_price_is_bilinear(i in 0u64..1_000_000, b in 0u64..1_000_000, pi in 0i64..1000, pb in 0i64..1000) {
            let usage = ResourceVector::new(i, b, 0, 0);
            let price = priced_usage(&usage, Money(pi), Money(pb)).unwrap();
            prop_assert_eq!(price.amount() as i128, i as i128 * pi as i128 + b as i128 * pb as i128);
        }
    }
}

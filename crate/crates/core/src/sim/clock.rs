use crate::ledger::types::JobId;
use crate::ledger::{Call, Ledger, LedgerError, LedgerEvent, Millis};
use crate::registry::AccountId;

/// A call waiting for the next block.
#[derive(Debug, Clone)]
pub struct PendingCall {
    pub caller: AccountId,
    pub call: Call,
    /// The job round this call belongs to; a failure aborts that round.
    pub round: Option<JobId>,
}

#[derive(Debug)]
pub struct Applied {
    pub caller: AccountId,
    pub round: Option<JobId>,
    pub result: Result<LedgerEvent, LedgerError>,
}

/// Calls submitted while block `k` is current take effect in block `k + 1`,
/// in submission order.
#[derive(Debug, Clone)]
pub struct BlockClock {
    interval: Millis,
    height: u64,
    pending: Vec<PendingCall>,
}

impl BlockClock {
    pub fn new(interval: Millis) -> BlockClock {
        BlockClock {
            interval,
            height: 0,
            pending: Vec::new(),
        }
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn now(&self) -> Millis {
        self.height * self.interval
    }

    /// Time at which pending calls will apply.
    pub fn next_time(&self) -> Millis {
        (self.height + 1) * self.interval
    }

    pub fn pending(&self) -> &[PendingCall] {
        &self.pending
    }

    pub fn submit(&mut self, caller: AccountId, call: Call, round: Option<JobId>) {
        self.pending.push(PendingCall {
            caller,
            call,
            round,
        });
    }

    pub fn seal(&mut self, ledger: &mut Ledger) -> Vec<Applied> {
        self.height += 1;
        ledger.advance_block(self.now());
        self.pending
            .drain(..)
            .map(|p| Applied {
                caller: p.caller,
                round: p.round,
                result: ledger.apply(p.caller, p.call),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::PlatformParams;
    use crate::money::Money;
    use crate::registry::JobCreatorProfile;

    #[test]
    fn calls_apply_in_the_next_block_in_order() {
        let jc = AccountId::job_creator(0);
        let mut ledger = Ledger::genesis(PlatformParams::default(), [(jc, Money(10))]).unwrap();
        let mut clock = BlockClock::new(10_000);
        clock.submit(
            jc,
            Call::RegisterJobCreator(JobCreatorProfile::default()),
            None,
        );
        clock.submit(
            jc,
            Call::RegisterJobCreator(JobCreatorProfile::default()),
            None,
        );
        assert!(ledger.events().is_empty());
        assert_eq!(clock.next_time(), 10_000);
        let applied = clock.seal(&mut ledger);
        assert!(applied[0].result.is_ok());
        assert_eq!(applied[1].result, Err(LedgerError::AlreadyRegistered(jc)));
        assert_eq!((ledger.height(), ledger.now()), (1, 10_000));
        assert_eq!(ledger.events()[0].block, 1);
        assert!(clock.pending().is_empty());
    }
}

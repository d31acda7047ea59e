use serde::{Deserialize, Serialize};

use crate::money::{Money, MoneyOverflow};

/// Off-ledger costs and benefits of one agent, kept apart from balances so
/// that conservation covers only contract money.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateAccount {
    pub benefit: Money,
    pub execution_cost: Money,
    pub deception_cost: Money,
    pub verification_cost: Money,
    pub executions: u64,
    pub forgeries: u64,
    pub verifications: u64,
}

impl PrivateAccount {
    pub fn credit_benefit(&mut self, amount: Money) -> Result<(), MoneyOverflow> {
        self.benefit = self.benefit.checked_add(amount)?;
        Ok(())
    }

    pub fn charge_execution(&mut self, amount: Money) -> Result<(), MoneyOverflow> {
        self.execution_cost = self.execution_cost.checked_add(amount)?;
        self.executions += 1;
        Ok(())
    }

    pub fn charge_deception(&mut self, amount: Money) -> Result<(), MoneyOverflow> {
        self.deception_cost = self.deception_cost.checked_add(amount)?;
        self.forgeries += 1;
        Ok(())
    }

    pub fn charge_verification(&mut self, amount: Money) -> Result<(), MoneyOverflow> {
        self.verification_cost = self.verification_cost.checked_add(amount)?;
        self.verifications += 1;
        Ok(())
    }

    /// Benefit minus all costs.
    pub fn net(&self) -> Result<Money, MoneyOverflow> {
        self.benefit
            .checked_sub(self.execution_cost)?
            .checked_sub(self.deception_cost)?
            .checked_sub(self.verification_cost)
    }
}

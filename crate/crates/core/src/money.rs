//! Exact integer currency.
//!
//! Amounts are signed 64-bit counts of micro-units (10⁻⁶ of the display
//! currency). Every arithmetic helper is checked; overflow surfaces as
//! [`MoneyOverflow`] instead of wrapping.

use std::fmt;
use std::iter::Sum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Micro-units per display unit.
pub const MICROS_PER_UNIT: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("money arithmetic overflowed")]
pub struct MoneyOverflow;

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn micros(amount: i64) -> Self {
        Money(amount)
    }

    pub const fn amount(self) -> i64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn checked_add(self, rhs: Money) -> Result<Money, MoneyOverflow> {
        self.0.checked_add(rhs.0).map(Money).ok_or(MoneyOverflow)
    }

    pub fn checked_sub(self, rhs: Money) -> Result<Money, MoneyOverflow> {
        self.0.checked_sub(rhs.0).map(Money).ok_or(MoneyOverflow)
    }

    /// Multiply by a non-negative count (a resource quantity or a rate).
    pub fn checked_mul(self, count: u64) -> Result<Money, MoneyOverflow> {
        let count = i64::try_from(count).map_err(|_| MoneyOverflow)?;
        self.0.checked_mul(count).map(Money).ok_or(MoneyOverflow)
    }

    /// Floor division by a positive divisor.
    pub fn div_floor(self, divisor: i64) -> Money {
        Money(self.0.div_euclid(divisor))
    }

    pub fn min(self, other: Money) -> Money {
        Money(self.0.min(other.0))
    }

    pub fn max(self, other: Money) -> Money {
        Money(self.0.max(other.0))
    }

    /// Display-unit value as a float, for analysis only.
    pub fn to_units(self) -> f64 {
        self.0 as f64 / MICROS_PER_UNIT as f64
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<i64> for Money {
    fn from(v: i64) -> Self {
        Money(v)
    }
}

/// Sums into `i128` so a conservation audit can never overflow itself.
pub fn total<I: IntoIterator<Item = Money>>(items: I) -> i128 {
    items.into_iter().map(|m| m.0 as i128).sum()
}

impl Sum for Money {
    /// Panics on overflow; ledger code uses [`Money::checked_add`] instead.
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Self {
        iter.fold(Money::ZERO, |acc, m| {
            acc.checked_add(m).expect("money sum overflowed")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_is_an_error() {
        assert_eq!(Money(i64::MAX).checked_add(Money(1)), Err(MoneyOverflow));
        assert_eq!(Money(i64::MIN).checked_sub(Money(1)), Err(MoneyOverflow));
        assert_eq!(Money(i64::MAX).checked_mul(2), Err(MoneyOverflow));
        assert_eq!(Money(1).checked_mul(u64::MAX), Err(MoneyOverflow));
    }

    #[test]
    fn floor_division_rounds_down() {
        assert_eq!(Money(11).div_floor(2), Money(5));
        assert_eq!(Money(10).div_floor(2), Money(5));
    }

    #[test]
    fn wide_total() {
        let t = total([Money(i64::MAX), Money(i64::MAX)]);
        assert_eq!(t, 2 * i64::MAX as i128);
    }
}

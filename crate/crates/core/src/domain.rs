//! Value types shared by every layer: money, participants, payments, batches
//! and orderings.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An exact amount in cents. Signed so that net positions can go negative.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_cents(cents: i64) -> Self {
        Money(cents)
    }

    pub const fn cents(self) -> i64 {
        self.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// `max(0, self)`.
    pub fn positive_part(self) -> Money {
        Money(self.0.max(0))
    }

    /// Smallest multiple of `unit` that is `>= self`. `unit` must be positive.
    pub fn ceil_to(self, unit: Money) -> Money {
        debug_assert!(unit.0 > 0);
        Money(self.0.div_euclid(unit.0) * unit.0 + if self.0.rem_euclid(unit.0) == 0 { 0 } else { unit.0 })
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}${}.{:02}", abs / 100, abs % 100)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

/// Dense participant index into a [`crate::ledger::Ledger`].
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ParticipantId(pub u32);

impl ParticipantId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Milliseconds since midnight of the business day.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_seconds(secs: f64) -> Self {
        Timestamp((secs * 1000.0).round() as i64)
    }

    pub fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn seconds(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaymentError {
    #[error("payment {id}: payer and payee are both {payer}")]
    SelfPayment { id: u64, payer: ParticipantId },
    #[error("payment {id}: value {value} is not positive")]
    NonPositiveValue { id: u64, value: Money },
}

/// One indivisible transfer request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payment {
    pub id: u64,
    pub payer: ParticipantId,
    pub payee: ParticipantId,
    pub value: Money,
    pub submitted_at: Timestamp,
}

impl Payment {
    pub fn new(
        id: u64,
        payer: ParticipantId,
        payee: ParticipantId,
        value: Money,
        submitted_at: Timestamp,
    ) -> Result<Self, PaymentError> {
        if payer == payee {
            return Err(PaymentError::SelfPayment { id, payer });
        }
        if !value.is_positive() {
            return Err(PaymentError::NonPositiveValue { id, value });
        }
        Ok(Payment { id, payer, payee, value, submitted_at })
    }

    /// Signed flow of this payment for `participant`: `+v` to the payee,
    /// `-v` to the payer, zero otherwise.
    pub fn flow(&self, participant: ParticipantId) -> Money {
        if participant == self.payee {
            self.value
        } else if participant == self.payer {
            -self.value
        } else {
            Money::ZERO
        }
    }
}

/// A window of payments optimized together. Indices into `payments` are the
/// batch-local payment indices used by [`Ordering`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub index: usize,
    pub payments: Vec<Payment>,
}

impl Batch {
    pub fn new(index: usize, payments: Vec<Payment>) -> Self {
        Batch { index, payments }
    }

    pub fn len(&self) -> usize {
        self.payments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payments.is_empty()
    }

    pub fn total_value(&self) -> Money {
        self.payments.iter().map(|p| p.value).sum()
    }

    /// Time between the first and the last arrival in the window.
    pub fn wait_time_ms(&self) -> i64 {
        match (self.payments.first(), self.payments.last()) {
            (Some(first), Some(last)) => last.submitted_at.0 - first.submitted_at.0,
            _ => 0,
        }
    }

    /// Distinct participants that send at least one payment, ascending.
    pub fn payers(&self) -> Vec<ParticipantId> {
        let mut ids: Vec<_> = self.payments.iter().map(|p| p.payer).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Distinct participants touched by the batch, ascending.
    pub fn participants(&self) -> Vec<ParticipantId> {
        let mut ids: Vec<_> = self.payments.iter().flat_map(|p| [p.payer, p.payee]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderingError {
    #[error("ordering has {got} entries but the batch has {expected} payments")]
    WrongLength { expected: usize, got: usize },
    #[error("payment index {0} is out of range")]
    OutOfRange(usize),
    #[error("payment index {0} appears more than once")]
    Duplicate(usize),
}

/// Settlement sequence for a batch: `sequence[t]` is the batch-local index
/// of the payment settled at position `t` (both zero-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ordering(Vec<usize>);

impl Ordering {
    pub fn identity(n: usize) -> Self {
        Ordering((0..n).collect())
    }

    pub fn new(sequence: Vec<usize>) -> Result<Self, OrderingError> {
        let n = sequence.len();
        let mut seen = vec![false; n];
        for &i in &sequence {
            if i >= n {
                return Err(OrderingError::OutOfRange(i));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(OrderingError::Duplicate(i));
            }
        }
        Ok(Ordering(sequence))
    }

    /// Builds an ordering from one-based payment numbers, e.g. `[4, 1, 7, ...]`.
    pub fn from_one_based(sequence: &[usize]) -> Result<Self, OrderingError> {
        let zero: Result<Vec<usize>, _> = sequence
            .iter()
            .map(|&i| i.checked_sub(1).ok_or(OrderingError::OutOfRange(0)))
            .collect();
        Ordering::new(zero?)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(t, &i)| t == i)
    }

    /// `position_of()[i]` is the settlement position of payment `i`.
    pub fn position_of(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (t, &i) in self.0.iter().enumerate() {
            pos[i] = t;
        }
        pos
    }

    pub fn check_for(&self, batch: &Batch) -> Result<(), OrderingError> {
        if self.len() != batch.len() {
            return Err(OrderingError::WrongLength { expected: batch.len(), got: self.len() });
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Ordering {
    type Error = OrderingError;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        Ordering::new(v)
    }
}

impl From<Ordering> for Vec<usize> {
    fn from(o: Ordering) -> Vec<usize> {
        o.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_rejects_duplicates_and_gaps() {
        assert_eq!(Ordering::new(vec![0, 0]), Err(OrderingError::Duplicate(0)));
        assert_eq!(Ordering::new(vec![0, 2]), Err(OrderingError::OutOfRange(2)));
        assert!(Ordering::new(vec![]).unwrap().is_identity());
        let o = Ordering::from_one_based(&[2, 3, 1]).unwrap();
        assert_eq!(o.as_slice(), &[1, 2, 0]);
        assert_eq!(o.position_of(), vec![2, 0, 1]);
    }

    #[test]
    fn payment_invariants() {
        let a = ParticipantId(0);
        let b = ParticipantId(1);
        let t = Timestamp::default();
        assert!(Payment::new(1, a, a, Money::from_cents(5), t).is_err());
        assert!(Payment::new(1, a, b, Money::ZERO, t).is_err());
        let p = Payment::new(1, a, b, Money::from_cents(5), t).unwrap();
        assert_eq!(p.flow(a).cents(), -5);
        assert_eq!(p.flow(b).cents(), 5);
        assert_eq!(p.flow(ParticipantId(2)), Money::ZERO);
    }

    #[test]
    fn money_ceil_and_display() {
        let unit = Money::from_cents(100);
        assert_eq!(Money::from_cents(0).ceil_to(unit).cents(), 0);
        assert_eq!(Money::from_cents(1).ceil_to(unit).cents(), 100);
        assert_eq!(Money::from_cents(100).ceil_to(unit).cents(), 100);
        assert_eq!(Money::from_cents(-1050).to_string(), "-$10.50");
    }
}

//! Binary encodings of the batch-reordering problem.
//!
//! [`build_qubo`] produces the penalty Hamiltonian over assignment bits
//! `x[i][t]` (payment `i` settles at position `t`), log-encoded liquidity
//! registers `b` and log-encoded slack registers `s(t)`:
//!
//! ```text
//! H = sum_a b_a
//!   + l1 * sum_{a,t} (b_a + N_a(0) + mNDP_a + sum_i sum_{tau<=t} f(a,i) x[i][tau] - s_a(t))^2
//!   + l2 * sum_i (1 - sum_t x[i][t])^2 + l2 * sum_t (1 - sum_i x[i][t])^2
//! ```
//!
//! [`build_cqm`] keeps the same objective with the constraints explicit.

mod build;
mod codec;
mod cqm;
mod dump;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Money, ParticipantId};
use crate::ledger::LedgerError;

pub use build::{bias_census, build_qubo, BiasCensus, QuboParams};
pub use codec::{decode_assignment, decode_block, encode_ordering, Decoded, Infeasibility};
pub use cqm::{build_cqm, BalanceConstraint, CqmCheck, CqmModel, OneHotAxis, OneHotConstraint};
pub use dump::{read_dump, write_dump, QuboDump};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuboError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("penalty weights must be positive (balance {balance}, one-hot {one_hot})")]
    BadPenalty { balance: String, one_hot: String },
    #[error("base unit must be at least one cent, got {0}")]
    BadBaseUnit(Money),
    #[error(
        "slack bound {bound} cannot represent the slack of the balance constraint \
         for participant {participant} at position {position} (needs {needed})"
    )]
    SlackBoundTooSmall { participant: ParticipantId, position: usize, needed: Money, bound: Money },
    #[error("liquidity {value} for participant {participant} does not fit its register")]
    Unrepresentable { participant: ParticipantId, value: Money },
    #[error("assignment has {got} bits but the model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// What a binary variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VarTag {
    /// `x[payment][position]`.
    Assignment { payment: usize, position: usize },
    /// Bit `bit` of participant's liquidity register.
    LiquidityBit { participant: ParticipantId, bit: u32 },
    /// Bit `bit` of the slack for participant's balance at `position`.
    SlackBit { participant: ParticipantId, position: usize, bit: u32 },
}

/// A little-endian run of bits encoding `unit * sum_j 2^j bit_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub first_var: usize,
    pub bits: u32,
    pub unit: Money,
}

impl Register {
    pub fn max_value(&self) -> Money {
        Money::from_cents(self.unit.cents() * ((1i64 << self.bits) - 1))
    }

    pub fn read(&self, bits: &[u8]) -> Money {
        let raw: i64 = (0..self.bits as usize)
            .filter(|&j| bits[self.first_var + j] != 0)
            .map(|j| 1i64 << j)
            .sum();
        Money::from_cents(raw * self.unit.cents())
    }

    /// Writes `value` (a multiple of `unit`) into `bits`.
    fn write(&self, bits: &mut [u8], value: Money) -> bool {
        if value < Money::ZERO || value > self.max_value() || value.cents() % self.unit.cents() != 0 {
            return false;
        }
        let raw = value.cents() / self.unit.cents();
        for j in 0..self.bits as usize {
            bits[self.first_var + j] = ((raw >> j) & 1) as u8;
        }
        true
    }

    fn vars(&self) -> std::ops::Range<usize> {
        self.first_var..self.first_var + self.bits as usize
    }
}

/// Balance penalty block for one priced participant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PricedParticipant {
    pub participant: ParticipantId,
    /// Available liquidity `N(0) + mNDP` at batch start.
    pub available: Money,
    pub liquidity: Register,
    /// One slack register per position `t = 0..n`.
    pub slack: Vec<Register>,
}

/// A bit vector evaluated against a [`QuboModel`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryAssignment {
    pub values: Vec<u8>,
}

impl BinaryAssignment {
    pub fn zeros(len: usize) -> Self {
        BinaryAssignment { values: vec![0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Upper-triangular QUBO with its variable registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    num_payments: usize,
    linear: Vec<f64>,
    /// `(i, j, c)` with `i < j`, sorted, no duplicates, no zeros.
    quadratic: Vec<(u32, u32, f64)>,
    offset: f64,
    registry: Vec<VarTag>,
    priced: Vec<PricedParticipant>,
    params: QuboParams,
    census: BiasCensus,
}

impl QuboModel {
    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    /// Number of payments `n`; the first `n * n` variables are `x[i][t]`
    /// at index `i * n + t`.
    pub fn num_payments(&self) -> usize {
        self.num_payments
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear_coefficient(&self, var: usize) -> f64 {
        self.linear[var]
    }

    /// Non-zero linear coefficients.
    pub fn linear(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.linear.iter().copied().enumerate().filter(|(_, c)| *c != 0.0)
    }

    pub fn quadratic(&self) -> &[(u32, u32, f64)] {
        &self.quadratic
    }

    pub fn registry(&self) -> &[VarTag] {
        &self.registry
    }

    pub fn priced(&self) -> &[PricedParticipant] {
        &self.priced
    }

    pub fn params(&self) -> &QuboParams {
        &self.params
    }

    /// Term counts recorded while building.
    pub fn census(&self) -> &BiasCensus {
        &self.census
    }

    pub fn assignment_var(&self, payment: usize, position: usize) -> usize {
        payment * self.num_payments + position
    }

    fn check_len(&self, a: &BinaryAssignment) -> Result<(), QuboError> {
        if a.len() != self.num_vars() {
            return Err(QuboError::LengthMismatch { expected: self.num_vars(), got: a.len() });
        }
        Ok(())
    }

    /// `offset + sum linear + sum quadratic` at `assignment`.
    pub fn energy(&self, assignment: &BinaryAssignment) -> Result<f64, QuboError> {
        self.check_len(assignment)?;
        let x = &assignment.values;
        let mut e = self.offset;
        for (v, c) in self.linear.iter().enumerate() {
            if x[v] != 0 {
                e += c;
            }
        }
        for &(i, j, c) in &self.quadratic {
            if x[i as usize] != 0 && x[j as usize] != 0 {
                e += c;
            }
        }
        Ok(e)
    }

    /// Objective part of the energy: `sum_a b_a` read from the liquidity
    /// registers.
    pub fn objective_value(&self, assignment: &BinaryAssignment) -> Result<Money, QuboError> {
        self.check_len(assignment)?;
        Ok(self.priced.iter().map(|p| p.liquidity.read(&assignment.values)).sum())
    }

    /// Liquidity register contents per priced participant.
    pub fn liquidity_values(&self, assignment: &BinaryAssignment) -> Vec<(ParticipantId, Money)> {
        self.priced.iter().map(|p| (p.participant, p.liquidity.read(&assignment.values))).collect()
    }
}

/// Number of bits needed to represent every integer in `0..=max`.
pub(crate) fn bit_width(max: i64) -> u32 {
    debug_assert!(max >= 0);
    64 - (max as u64).leading_zeros()
}

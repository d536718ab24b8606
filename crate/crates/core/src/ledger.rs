//! Exact money-ledger accounting for one batch: net-position trajectories,
//! maximum net debit positions (mNDP) and the liquidity a given settlement
//! order requires.
//!
//! For participant `a` with start position `N(0)` and carried `mndp`, the
//! available liquidity after the first `t` settlements of an ordering is
//! `N(0) + mndp + sum of flows through t`. The required top-up `b` is the
//! smallest non-negative amount keeping that quantity non-negative for every
//! `t = 1..n`, which is `max(0, -min_t(...))`. Everything here is integer
//! cents; nothing rounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Batch, Money, Ordering, OrderingError, ParticipantId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("payment {payment_id} references unknown participant {participant}")]
    UnknownParticipant { payment_id: u64, participant: ParticipantId },
    #[error("participant {0} has a negative mNDP")]
    NegativeMndp(ParticipantId),
    #[error("participant {participant} starts with negative available liquidity {available}")]
    NegativeLiquidity { participant: ParticipantId, available: Money },
    #[error(transparent)]
    Ordering(#[from] OrderingError),
}

/// A bank's running net position and the deepest net debit it has reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantState {
    pub participant: ParticipantId,
    pub net_position: Money,
    pub mndp: Money,
}

impl ParticipantState {
    pub fn zero(participant: ParticipantId) -> Self {
        ParticipantState { participant, net_position: Money::ZERO, mndp: Money::ZERO }
    }

    /// `net_position + mndp`, the quantity that must stay non-negative.
    pub fn available(&self) -> Money {
        self.net_position + self.mndp
    }
}

/// States for a fixed roster of participants, indexed by [`ParticipantId`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParticipantState>", into = "Vec<ParticipantState>")]
pub struct Ledger {
    states: Vec<ParticipantState>,
}

impl Ledger {
    /// Day-open ledger: every participant at zero position and zero mNDP.
    pub fn zeroed(num_participants: usize) -> Self {
        Ledger {
            states: (0..num_participants as u32).map(|i| ParticipantState::zero(ParticipantId(i))).collect(),
        }
    }

    /// Builds a ledger from explicit states. States must be listed in id
    /// order, carry a non-negative mNDP and non-negative available liquidity.
    pub fn from_states(states: Vec<ParticipantState>) -> Result<Self, LedgerError> {
        for (i, s) in states.iter().enumerate() {
            assert_eq!(s.participant.index(), i, "ledger states must be listed in id order");
            if s.mndp < Money::ZERO {
                return Err(LedgerError::NegativeMndp(s.participant));
            }
            if s.available() < Money::ZERO {
                return Err(LedgerError::NegativeLiquidity {
                    participant: s.participant,
                    available: s.available(),
                });
            }
        }
        Ok(Ledger { states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, id: ParticipantId) -> Option<&ParticipantState> {
        self.states.get(id.index())
    }

    pub fn states(&self) -> &[ParticipantState] {
        &self.states
    }

    /// Sum of all participants' mNDP.
    pub fn aggregate_mndp(&self) -> Money {
        self.states.iter().map(|s| s.mndp).sum()
    }

    /// Sum of all net positions. Constant under settlement.
    pub fn total_position(&self) -> Money {
        self.states.iter().map(|s| s.net_position).sum()
    }

    /// Checks that every payer and payee of `batch` has a state here.
    pub fn check_batch(&self, batch: &Batch) -> Result<(), LedgerError> {
        for p in &batch.payments {
            for participant in [p.payer, p.payee] {
                if participant.index() >= self.states.len() {
                    return Err(LedgerError::UnknownParticipant { payment_id: p.id, participant });
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<ParticipantState>> for Ledger {
    type Error = LedgerError;
    fn try_from(states: Vec<ParticipantState>) -> Result<Self, Self::Error> {
        Ledger::from_states(states)
    }
}

impl From<Ledger> for Vec<ParticipantState> {
    fn from(l: Ledger) -> Self {
        l.states
    }
}

/// An ordering together with what it costs in liquidity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingResult {
    pub ordering: Ordering,
    /// `b` per participant, indexed by [`ParticipantId`]; zero for
    /// participants outside the batch.
    pub required_liquidity: Vec<Money>,
    pub aggregate_cost: Money,
}

impl OrderingResult {
    pub fn liquidity_of(&self, id: ParticipantId) -> Money {
        self.required_liquidity.get(id.index()).copied().unwrap_or(Money::ZERO)
    }
}

fn validate(batch: &Batch, ordering: &Ordering, start: &Ledger) -> Result<(), LedgerError> {
    ordering.check_for(batch)?;
    start.check_batch(batch)
}

/// `N(t)` for `t = 0..=n` for every participant in `start`.
pub fn net_position_series(
    batch: &Batch,
    ordering: &Ordering,
    start: &Ledger,
) -> Result<Vec<Vec<Money>>, LedgerError> {
    validate(batch, ordering, start)?;
    let mut series: Vec<Vec<Money>> =
        start.states.iter().map(|s| Vec::from([s.net_position])).collect();
    let mut current: Vec<Money> = start.states.iter().map(|s| s.net_position).collect();
    for &i in ordering.as_slice() {
        let p = &batch.payments[i];
        current[p.payer.index()] -= p.value;
        current[p.payee.index()] += p.value;
        for (s, &c) in series.iter_mut().zip(&current) {
            s.push(c);
        }
    }
    Ok(series)
}

/// Required liquidity `b` for each participant when `batch` settles in
/// `ordering` from `start`.
pub fn required_liquidity(
    batch: &Batch,
    ordering: &Ordering,
    start: &Ledger,
) -> Result<OrderingResult, LedgerError> {
    validate(batch, ordering, start)?;
    let mut available: Vec<Money> = start.states.iter().map(|s| s.available()).collect();
    let mut required = vec![Money::ZERO; start.len()];
    for &i in ordering.as_slice() {
        let p = &batch.payments[i];
        let payer = p.payer.index();
        available[payer] -= p.value;
        available[p.payee.index()] += p.value;
        // only a debit can deepen the shortfall
        required[payer] = required[payer].max(-available[payer]);
    }
    let aggregate_cost = required.iter().sum();
    Ok(OrderingResult { ordering: ordering.clone(), required_liquidity: required, aggregate_cost })
}

/// Settles `batch` in `ordering` and returns the states that seed the next
/// batch: final net positions and `mndp + b`.
pub fn settle_and_carry(
    batch: &Batch,
    ordering: &Ordering,
    start: &Ledger,
) -> Result<Ledger, LedgerError> {
    let result = required_liquidity(batch, ordering, start)?;
    Ok(carry(batch, &result, start))
}

/// Applies an already computed result to `start`.
pub fn carry(batch: &Batch, result: &OrderingResult, start: &Ledger) -> Ledger {
    let mut states = start.states.clone();
    for p in &batch.payments {
        states[p.payer.index()].net_position -= p.value;
        states[p.payee.index()].net_position += p.value;
    }
    for (s, &b) in states.iter_mut().zip(&result.required_liquidity) {
        s.mndp += b;
    }
    Ledger { states }
}

/// Compact evaluator for repeated cost queries on one batch. Only the
/// participants touched by the batch are tracked.
#[derive(Debug, Clone)]
pub struct CostEvaluator {
    available: Vec<i64>,
    legs: Vec<(u32, u32, i64)>,
}

impl CostEvaluator {
    pub fn new(batch: &Batch, start: &Ledger) -> Result<Self, LedgerError> {
        start.check_batch(batch)?;
        let ids = batch.participants();
        let mut local = vec![u32::MAX; start.len()];
        for (k, id) in ids.iter().enumerate() {
            local[id.index()] = k as u32;
        }
        let available = ids.iter().map(|id| start.states[id.index()].available().cents()).collect();
        let legs = batch
            .payments
            .iter()
            .map(|p| (local[p.payer.index()], local[p.payee.index()], p.value.cents()))
            .collect();
        Ok(CostEvaluator { available, legs })
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    /// Aggregate cost of settling in `sequence` (batch-local indices).
    pub fn cost(&self, sequence: &[usize], scratch: &mut Vec<i64>) -> i64 {
        let m = self.available.len();
        scratch.clear();
        scratch.extend_from_slice(&self.available);
        scratch.resize(2 * m, 0);
        let (scratch, floor) = scratch.split_at_mut(m);
        let mut total = 0i64;
        for &i in sequence {
            let (payer, payee, v) = self.legs[i];
            let (payer, payee) = (payer as usize, payee as usize);
            scratch[payer] -= v;
            scratch[payee] += v;
            let short = -scratch[payer];
            if short > floor[payer] {
                total += short - floor[payer];
                floor[payer] = short;
            }
        }
        total
    }

    /// Starting available liquidity per compact participant.
    pub(crate) fn available(&self) -> &[i64] {
        &self.available
    }

    pub(crate) fn legs(&self) -> &[(u32, u32, i64)] {
        &self.legs
    }
}

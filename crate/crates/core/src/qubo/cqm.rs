use serde::{Deserialize, Serialize};

use super::QuboError;
use crate::domain::{Batch, Money, Ordering, ParticipantId};
use crate::ledger::Ledger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OneHotAxis {
    /// `sum_t x[i][t] = 1` for payment `i`.
    Payment,
    /// `sum_i x[i][t] = 1` for position `t`.
    Position,
}

/// `sum of vars = rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotConstraint {
    pub axis: OneHotAxis,
    pub index: usize,
    pub vars: Vec<usize>,
    pub rhs: i64,
}

/// `b + constant + sum coeff * x >= 0`, where `b` is present only for
/// participants in the objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceConstraint {
    pub participant: ParticipantId,
    pub position: usize,
    pub has_liquidity_var: bool,
    pub constant: Money,
    pub terms: Vec<(usize, Money)>,
}

/// Objective `min sum_a b_a` with explicit constraints over `x[i][t]`
/// (variable index `i * n + t`) and integer `b_a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CqmModel {
    pub num_payments: usize,
    /// Participants carrying an integer liquidity variable (the payers).
    pub objective: Vec<ParticipantId>,
    pub one_hot: Vec<OneHotConstraint>,
    pub balance: Vec<BalanceConstraint>,
}

/// Violations found by [`CqmModel::check`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CqmCheck {
    pub one_hot_violations: Vec<(OneHotAxis, usize)>,
    pub balance_violations: Vec<(ParticipantId, usize)>,
}

impl CqmCheck {
    pub fn is_feasible(&self) -> bool {
        self.one_hot_violations.is_empty() && self.balance_violations.is_empty()
    }
}

/// Builds the constrained model: one balance constraint per participant in
/// the batch and position, one one-hot constraint per payment and per position.
pub fn build_cqm(batch: &Batch, start: &Ledger) -> Result<CqmModel, QuboError> {
    if batch.is_empty() {
        return Err(QuboError::EmptyBatch);
    }
    start.check_batch(batch)?;
    let n = batch.len();
    let objective = batch.payers();

    let mut one_hot = Vec::with_capacity(2 * n);
    for i in 0..n {
        one_hot.push(OneHotConstraint {
            axis: OneHotAxis::Payment,
            index: i,
            vars: (0..n).map(|t| i * n + t).collect(),
            rhs: 1,
        });
    }
    for t in 0..n {
        one_hot.push(OneHotConstraint {
            axis: OneHotAxis::Position,
            index: t,
            vars: (0..n).map(|i| i * n + t).collect(),
            rhs: 1,
        });
    }

    let mut balance = Vec::new();
    for participant in batch.participants() {
        let constant = start.get(participant).expect("checked").available();
        let involved: Vec<(usize, Money)> = batch
            .payments
            .iter()
            .enumerate()
            .filter(|(_, p)| p.payer == participant || p.payee == participant)
            .map(|(i, p)| (i, p.flow(participant)))
            .collect();
        for t in 0..n {
            let terms = involved
                .iter()
                .flat_map(|&(i, f)| (0..=t).map(move |tau| (i * n + tau, f)))
                .collect();
            balance.push(BalanceConstraint {
                participant,
                position: t,
                has_liquidity_var: objective.binary_search(&participant).is_ok(),
                constant,
                terms,
            });
        }
    }
    Ok(CqmModel { num_payments: n, objective, one_hot, balance })
}

impl CqmModel {
    pub fn num_assignment_vars(&self) -> usize {
        self.num_payments * self.num_payments
    }

    /// Checks `x` and liquidity values (indexed by participant id) against
    /// every constraint.
    pub fn check(&self, x: &[u8], liquidity: &[Money]) -> CqmCheck {
        let mut out = CqmCheck::default();
        for c in &self.one_hot {
            let sum: i64 = c.vars.iter().map(|&v| x[v] as i64).sum();
            if sum != c.rhs {
                out.one_hot_violations.push((c.axis, c.index));
            }
        }
        for c in &self.balance {
            let b = if c.has_liquidity_var {
                liquidity.get(c.participant.index()).copied().unwrap_or(Money::ZERO)
            } else {
                Money::ZERO
            };
            let flows: Money = c.terms.iter().filter(|(v, _)| x[*v] != 0).map(|(_, f)| *f).sum();
            if b + c.constant + flows < Money::ZERO {
                out.balance_violations.push((c.participant, c.position));
            }
        }
        out
    }

    /// Row-major assignment block for `ordering`.
    pub fn assignment_for(&self, ordering: &Ordering) -> Vec<u8> {
        let n = self.num_payments;
        let mut x = vec![0u8; n * n];
        for (t, &i) in ordering.as_slice().iter().enumerate() {
            x[i * n + t] = 1;
        }
        x
    }

    /// `sum_a b_a` over objective participants.
    pub fn objective_value(&self, liquidity: &[Money]) -> Money {
        self.objective.iter().map(|p| liquidity.get(p.index()).copied().unwrap_or(Money::ZERO)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Payment, Timestamp};
    use crate::ledger::required_liquidity;

    fn pay(id: u64, from: u32, to: u32, cents: i64) -> Payment {
        Payment::new(id, ParticipantId(from), ParticipantId(to), Money::from_cents(cents), Timestamp(0))
            .unwrap()
    }

    #[test]
    fn counts_for_two_payments() {
        let batch = Batch::new(0, vec![pay(1, 0, 1, 10), pay(2, 1, 0, 5)]);
        let cqm = build_cqm(&batch, &Ledger::zeroed(2)).unwrap();
        assert_eq!(cqm.num_assignment_vars(), 4);
        assert_eq!(cqm.one_hot.len(), 4);
        assert_eq!(cqm.balance.len(), 4);
        assert!(cqm.one_hot.iter().all(|c| c.rhs == 1));
    }

    #[test]
    fn exact_liquidity_is_feasible_and_one_cent_less_is_not() {
        let batch = Batch::new(0, vec![pay(1, 0, 1, 10), pay(2, 2, 0, 10)]);
        let start = Ledger::zeroed(3);
        let cqm = build_cqm(&batch, &start).unwrap();
        let fifo = Ordering::identity(2);
        let r = required_liquidity(&batch, &fifo, &start).unwrap();
        let x = cqm.assignment_for(&fifo);
        assert!(cqm.check(&x, &r.required_liquidity).is_feasible());
        assert_eq!(cqm.objective_value(&r.required_liquidity), r.aggregate_cost);
        let mut short = r.required_liquidity.clone();
        short[0] -= Money::from_cents(1);
        assert_eq!(cqm.check(&x, &short).balance_violations, vec![(ParticipantId(0), 0)]);
    }
}

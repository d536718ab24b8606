use super::SolverError;
use crate::domain::{Batch, Ordering};
use crate::ledger::{required_liquidity, CostEvaluator, Ledger, OrderingResult};

/// 9! = 362,880 orderings.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 9;

struct Search<'a> {
    legs: &'a [(u32, u32, i64)],
    balance: Vec<i64>,
    shortfall: Vec<i64>,
    used: Vec<bool>,
    prefix: Vec<usize>,
    best_cost: i64,
    best: Vec<usize>,
}

impl Search<'_> {
    /// Depth-first in lexicographic order. A prefix whose cost already
    /// reaches the incumbent cannot produce a strictly better ordering, and
    /// anything it could tie with is lexicographically larger.
    fn descend(&mut self, cost: i64) {
        if cost >= self.best_cost {
            return;
        }
        let n = self.legs.len();
        if self.prefix.len() == n {
            self.best_cost = cost;
            self.best.clone_from(&self.prefix);
            return;
        }
        for i in 0..n {
            if self.used[i] {
                continue;
            }
            let (payer, payee, v) = self.legs[i];
            let (payer, payee) = (payer as usize, payee as usize);
            let old_short = self.shortfall[payer];
            self.balance[payer] -= v;
            self.balance[payee] += v;
            let short = old_short.max(-self.balance[payer]);
            self.shortfall[payer] = short;
            self.used[i] = true;
            self.prefix.push(i);

            self.descend(cost + short - old_short);

            self.prefix.pop();
            self.used[i] = false;
            self.shortfall[payer] = old_short;
            self.balance[payer] += v;
            self.balance[payee] -= v;
        }
    }
}

/// Global minimum over all `n!` orderings; the lexicographically smallest
/// optimal ordering wins ties.
pub fn solve_exact(batch: &Batch, start: &Ledger, limit: usize) -> Result<OrderingResult, SolverError> {
    let n = batch.len();
    if n > limit {
        return Err(SolverError::TooLarge { n, limit });
    }
    let eval = CostEvaluator::new(batch, start)?;
    let fifo: Vec<usize> = (0..n).collect();
    let fifo_cost = eval.cost(&fifo, &mut Vec::new());
    let mut search = Search {
        legs: eval.legs(),
        balance: eval.available().to_vec(),
        shortfall: vec![0; eval.available().len()],
        used: vec![false; n],
        prefix: Vec::with_capacity(n),
        // FIFO is the lexicographically first ordering, so it is the
        // incumbent; only strict improvements replace it.
        best_cost: fifo_cost,
        best: fifo,
    };
    search.descend(0);
    let ordering = Ordering::new(search.best).expect("search yields a permutation");
    Ok(required_liquidity(batch, &ordering, start)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Money, ParticipantId, Payment, Timestamp};

    fn pay(id: u64, from: u32, to: u32, cents: i64) -> Payment {
        Payment::new(id, ParticipantId(from), ParticipantId(to), Money::from_cents(cents), Timestamp(0))
            .unwrap()
    }

    #[test]
    fn two_payment_optimum() {
        let batch = Batch::new(0, vec![pay(1, 0, 1, 1000), pay(2, 2, 0, 1000)]);
        let r = solve_exact(&batch, &Ledger::zeroed(3), 9).unwrap();
        assert_eq!(r.ordering.one_based(), vec![2, 1]);
        assert_eq!(r.aggregate_cost.cents(), 1000);
    }

    #[test]
    fn single_payment_is_fifo() {
        let batch = Batch::new(0, vec![pay(1, 0, 1, 5)]);
        let r = solve_exact(&batch, &Ledger::zeroed(2), 9).unwrap();
        assert!(r.ordering.is_identity());
    }

    #[test]
    fn cycle_costs_ten_dollars_in_any_order() {
        let batch = Batch::new(0, vec![pay(1, 0, 1, 1000), pay(2, 1, 2, 1000), pay(3, 2, 0, 1000)]);
        let r = solve_exact(&batch, &Ledger::zeroed(3), 9).unwrap();
        assert_eq!(r.aggregate_cost.cents(), 1000);
        // every ordering ties, so the lexicographic winner is FIFO
        assert!(r.ordering.is_identity());
    }

    #[test]
    fn too_large_is_rejected() {
        let batch = Batch::new(0, (0..10).map(|k| pay(k, 0, 1, 1)).collect());
        assert_eq!(solve_exact(&batch, &Ledger::zeroed(2), 9), Err(SolverError::TooLarge { n: 10, limit: 9 }));
    }

    #[test]
    fn empty_batch() {
        let r = solve_exact(&Batch::new(0, vec![]), &Ledger::zeroed(1), 9).unwrap();
        assert!(r.ordering.is_empty());
        assert_eq!(r.aggregate_cost, Money::ZERO);
    }
}

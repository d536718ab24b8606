//! Exhaustive search for the cheapest ordering of a small batch.

use paysort::ledger::required_liquidity;
use paysort::solvers::{solve_exact, DEFAULT_EXHAUSTIVE_LIMIT};
use paysort::{Batch, Ledger, Money, Ordering, ParticipantId, Payment, Timestamp};

fn main() {
    // (payer, payee, dollars)
    let legs = [(0, 1, 7), (1, 2, 5), (2, 3, 6), (3, 0, 2), (1, 0, 4), (2, 0, 3)];
    let payments = legs
        .iter()
        .enumerate()
        .map(|(k, &(from, to, d))| {
            Payment::new(k as u64, ParticipantId(from), ParticipantId(to), Money::from_cents(d * 100), Timestamp(k as i64))
                .unwrap()
        })
        .collect();
    let batch = Batch::new(0, payments);
    let start = Ledger::zeroed(4);

    let fifo = required_liquidity(&batch, &Ordering::identity(batch.len()), &start).unwrap();
    let best = solve_exact(&batch, &start, DEFAULT_EXHAUSTIVE_LIMIT).unwrap();
    println!("FIFO    {:?} costs {}", fifo.ordering.one_based(), fifo.aggregate_cost);
    println!("optimal {:?} costs {}", best.ordering.one_based(), best.aggregate_cost);
    println!("saving  {}", fifo.aggregate_cost - best.aggregate_cost);

    let too_big = Batch::new(1, [batch.payments.clone(), batch.payments.clone()].concat());
    match solve_exact(&too_big, &start, DEFAULT_EXHAUSTIVE_LIMIT) {
        Ok(_) => println!("unexpectedly solved a 12-payment batch"),
        Err(e) => println!("12 payments: {e}"),
    }
}

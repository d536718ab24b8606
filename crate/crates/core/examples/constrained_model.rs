//! The constrained formulation: explicit one-hot and balance constraints
//! with integer liquidity variables, checked against an ordering.

use paysort::ledger::required_liquidity;
use paysort::qubo::build_cqm;
use paysort::{Batch, Ledger, Money, Ordering, ParticipantId, Payment, Timestamp};

fn main() {
    let legs = [(0, 1, 900), (1, 2, 400), (2, 0, 600)];
    let batch = Batch::new(
        0,
        legs.iter()
            .enumerate()
            .map(|(k, &(f, t, v))| {
                Payment::new(k as u64, ParticipantId(f), ParticipantId(t), Money::from_cents(v), Timestamp(k as i64)).unwrap()
            })
            .collect(),
    );
    let start = Ledger::zeroed(3);
    let cqm = build_cqm(&batch, &start).unwrap();
    println!("{} one-hot and {} balance constraints", cqm.one_hot.len(), cqm.balance.len());

    let ordering = Ordering::new(vec![2, 0, 1]).unwrap();
    let x = cqm.assignment_for(&ordering);
    let need = required_liquidity(&batch, &ordering, &start).unwrap().required_liquidity;
    let shown: Vec<String> = need.iter().map(|m| m.to_string()).collect();
    println!("with exact liquidity {shown:?}: feasible = {}", cqm.check(&x, &need).is_feasible());
    let mut short = need.clone();
    short[2] = short[2] - Money::from_cents(1);
    let check = cqm.check(&x, &short);
    println!("one cent short: violated balance rows {:?}", check.balance_violations);
    println!("objective {}", cqm.objective_value(&need));
}

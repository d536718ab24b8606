//! Net positions, mNDP and required liquidity for one small batch, under
//! both possible orderings.

use paysort::ledger::{net_position_series, required_liquidity, settle_and_carry};
use paysort::{Batch, Ledger, Money, Ordering, ParticipantId, Payment, Timestamp};

fn pay(id: u64, from: u32, to: u32, dollars: i64) -> Payment {
    Payment::new(id, ParticipantId(from), ParticipantId(to), Money::from_cents(dollars * 100), Timestamp(id as i64))
        .expect("valid payment")
}

fn main() {
    // A pays B $10, then C pays A $10
    let batch = Batch::new(0, vec![pay(0, 0, 1, 10), pay(1, 2, 0, 10)]);
    let start = Ledger::zeroed(3);
    let names = ["A", "B", "C"];

    for order in [vec![0, 1], vec![1, 0]] {
        let ordering = Ordering::new(order).unwrap();
        let series = net_position_series(&batch, &ordering, &start).unwrap();
        let result = required_liquidity(&batch, &ordering, &start).unwrap();
        println!("order {:?}: aggregate {}", ordering.one_based(), result.aggregate_cost);
        for (a, positions) in series.iter().enumerate() {
            let path: Vec<String> = positions.iter().map(|m| m.to_string()).collect();
            println!("  {}: {}  needs {}", names[a], path.join(" -> "), result.required_liquidity[a]);
        }
    }

    // settling carries the required liquidity forward as each participant's mNDP
    let after = settle_and_carry(&batch, &Ordering::identity(2), &start).unwrap();
    for s in after.states() {
        println!("{}: net {}, mNDP {}, available {}", names[s.participant.index()], s.net_position, s.mndp, s.available());
    }
}

//! Builds the penalty QUBO for a batch, checks that an encoded ordering's
//! energy is its liquidity cost, and writes the model in the text dump
//! format.

use std::io::BufReader;

use paysort::ledger::required_liquidity;
use paysort::qubo::{build_qubo, encode_ordering, read_dump, write_dump, QuboParams};
use paysort::{Batch, Ledger, Money, Ordering, ParticipantId, Payment, Timestamp};

fn main() -> std::io::Result<()> {
    let legs = [(0, 1, 2000), (1, 2, 1500), (2, 0, 500), (1, 0, 700)];
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
    let params = QuboParams::for_batch(&batch, Money::from_cents(1));
    let model = build_qubo(&batch, &start, &params).unwrap();

    let census = model.census();
    println!(
        "{} variables ({} assignment), {} priced payers, {} quadratic terms",
        model.num_vars(),
        batch.len() * batch.len(),
        model.priced().len(),
        model.quadratic().len()
    );
    println!("balance-penalty linear terms: {}", census.balance_linear_terms);

    for order in [vec![0, 1, 2, 3], vec![2, 3, 0, 1]] {
        let ordering = Ordering::new(order).unwrap();
        let bits = encode_ordering(&ordering, &batch, &start, &model).unwrap();
        let cost = required_liquidity(&batch, &ordering, &start).unwrap().aggregate_cost;
        println!("order {:?}: energy {} cents, cost {}", ordering.one_based(), model.energy(&bits).unwrap(), cost);
    }

    let path = std::env::temp_dir().join("paysort-example.qubo");
    write_dump(&model, std::fs::File::create(&path)?)?;
    let dump = read_dump(BufReader::new(std::fs::File::open(&path)?))?;
    println!("wrote {} ({} linear, {} quadratic lines)", path.display(), dump.linear.len(), dump.quadratic.len());
    Ok(())
}

//! Reading an ordering back out of a permutation-matrix assignment, and
//! spotting assignments that settle a payment twice.

use paysort::qubo::{decode_block, Decoded};

fn show(bits: &[u8], n: usize) {
    for row in bits.chunks(n) {
        println!("  {}", row.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "));
    }
}

fn main() {
    // row = payment, column = settlement position
    let rows: [[u8; 7]; 7] = [
        [0, 1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 0, 1, 0],
        [1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1],
        [0, 0, 1, 0, 0, 0, 0],
    ];
    let mut bits: Vec<u8> = rows.iter().flatten().copied().collect();
    show(&bits, 7);
    if let Ok(Decoded::Feasible(order)) = decode_block(&bits, 7) {
        println!("settle payments in order {:?}", order.one_based());
    }

    bits[3] = 1; // payment 1 also at position 4
    match decode_block(&bits, 7).unwrap() {
        Decoded::Infeasible(why) => println!("duplicate: bad rows {:?}, bad columns {:?}", why.rows, why.columns),
        Decoded::Feasible(o) => println!("unexpectedly feasible: {:?}", o.one_based()),
    }
}

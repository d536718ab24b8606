//! Swap-neighbourhood local search on batches too large for exhaustive
//! search, taken from a synthetic day.

use paysort::data::{generate_day, SyntheticDayConfig};
use paysort::ledger::required_liquidity;
use paysort::solvers::{select_best, solve_local_search, Neighborhood, SolverConfig, SolverKind};
use paysort::{Batch, Ordering};

fn main() {
    let day = generate_day(&SyntheticDayConfig::new(12, 3000, 3)).unwrap();
    let start = day.start_ledger();
    for neighborhood in [Neighborhood::AdjacentSwap, Neighborhood::AnySwap] {
        let mut config = SolverConfig::new(SolverKind::LocalSearch).with_samples(8).with_seed(1);
        config.neighborhood = neighborhood;
        for size in [20, 70] {
            let batch = Batch::new(0, day.payments[..size].to_vec());
            let fifo = required_liquidity(&batch, &Ordering::identity(size), &start).unwrap();
            let set = solve_local_search(&batch, &start, &config).unwrap();
            let best = select_best(&set, &batch, &start).unwrap().expect("local search is always feasible");
            println!(
                "{neighborhood:?}, {size} payments: FIFO {} -> {} ({:.1}% less)",
                fifo.aggregate_cost,
                best.aggregate_cost,
                100.0 * (fifo.aggregate_cost - best.aggregate_cost).cents() as f64 / fifo.aggregate_cost.cents().max(1) as f64
            );
        }
    }
}

//! FIFO against local search over a whole synthetic day, in both race
//! scenarios.

use paysort::data::{generate_day, SyntheticDayConfig};
use paysort::pipeline::{run_day, BatchClassification, RunConfig, Scenario};
use paysort::solvers::{SolverConfig, SolverKind};
use paysort::Money;

fn main() {
    let day = generate_day(&SyntheticDayConfig::new(15, 6000, 11)).unwrap();
    for scenario in [Scenario::DayRace, Scenario::BatchRace] {
        let config = RunConfig::new(scenario, 70, SolverConfig::new(SolverKind::LocalSearch).with_seed(5));
        let run = run_day(&day.payments, &day.start_ledger(), &config).unwrap();
        let improved = run.records.iter().filter(|r| r.classification == BatchClassification::Improved).count();
        let banked: Money = run.records.iter().map(|r| r.savings()).sum();
        println!("{scenario:?}: {} batches, {improved} improved, per-batch savings {banked}", run.records.len());
        if scenario == Scenario::DayRace {
            println!(
                "  end of day: FIFO holds {}, reordered holds {}",
                run.fifo_end.aggregate_mndp(),
                run.solver_end.aggregate_mndp()
            );
        }
    }
}

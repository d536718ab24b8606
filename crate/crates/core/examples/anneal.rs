//! Simulated annealing over the QUBO of a six-payment batch, compared with
//! the exact optimum.

use paysort::qubo::build_qubo;
use paysort::solvers::{select_best, solve_exact, solve_sa, SolverConfig};
use paysort::{Batch, Ledger, Money, ParticipantId, Payment, Timestamp};

fn main() {
    let legs = [(0, 1, 120), (1, 2, 340), (2, 0, 95), (1, 0, 410), (0, 2, 260), (2, 1, 150)];
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

    let config = SolverConfig::tuned_annealing().with_samples(20).with_sweeps(3000).with_seed(7);
    let model = build_qubo(&batch, &start, &config.qubo_params(&batch)).unwrap();
    let samples = solve_sa(&model, &config).unwrap();
    println!(
        "{} samples over {} variables, {} feasible, {:.2} s",
        samples.len(),
        model.num_vars(),
        samples.stats.num_feasible,
        samples.stats.wall_time_secs
    );
    let best = select_best(&samples, &batch, &start).unwrap();
    let exact = solve_exact(&batch, &start, 9).unwrap();
    match best {
        Some(b) => println!("annealer: {:?} costs {}", b.ordering.one_based(), b.aggregate_cost),
        None => println!("annealer: no feasible sample"),
    }
    println!("exact:    {:?} costs {}", exact.ordering.one_based(), exact.aggregate_cost);
}

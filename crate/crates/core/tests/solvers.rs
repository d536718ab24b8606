mod common;

use common::*;
use paysort::solvers::{select_best, solve, solve_exact, Sample, SampleSet, SampleState, SolverConfig, SolverKind};
use paysort::Ordering;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_solver_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..60 {
        let n = rng.gen_range(1..=7);
        let m = rng.gen_range(2..=5);
        let legs = random_legs(&mut rng, n, m, 5000);
        let start = random_start(&mut rng, m, 2000);
        let best = solve_exact(&batch_of(&legs), &ledger_of(&start), 9).unwrap();
        assert_eq!(best.aggregate_cost.cents(), oracle_min(&legs, &start));
        assert_eq!(oracle_cost(&legs, best.ordering.as_slice(), &start), best.aggregate_cost.cents());
    }
}

#[test]
fn exact_solver_refuses_batches_over_its_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let legs = random_legs(&mut rng, 10, 3, 100);
    assert!(solve_exact(&batch_of(&legs), &ledger_of(&vec![(0, 0); 3]), 9).is_err());
}

#[test]
fn local_search_returns_valid_orderings_near_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut hits = 0;
    let trials: usize = 40;
    for k in 0..trials as u64 {
        let n = rng.gen_range(3..=7);
        let legs = random_legs(&mut rng, n, 4, 5000);
        let start = random_start(&mut rng, 4, 1000);
        let (batch, ledger) = (batch_of(&legs), ledger_of(&start));
        let config = SolverConfig::new(SolverKind::LocalSearch).with_seed(k).with_samples(8);
        let set = solve(&batch, &ledger, &config).unwrap();
        assert!(set.samples.iter().all(|s| s.ordering.is_some()));
        let best = select_best(&set, &batch, &ledger).unwrap().unwrap();
        let optimum = oracle_min(&legs, &start);
        assert!(best.aggregate_cost.cents() >= optimum);
        assert!(best.aggregate_cost.cents() <= oracle_cost(&legs, &(0..n).collect::<Vec<_>>(), &start));
        hits += usize::from(best.aggregate_cost.cents() == optimum);
    }
    assert!(hits * 10 >= trials * 9, "{hits}/{trials} optimal");
}

#[test]
fn annealing_is_reproducible_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let legs = random_legs(&mut rng, 5, 3, 3000);
    let start = vec![(0, 0); 3];
    let (batch, ledger) = (batch_of(&legs), ledger_of(&start));
    let config = SolverConfig::new(SolverKind::SaQubo).with_seed(99).with_samples(6).with_sweeps(300);
    let a = solve(&batch, &ledger, &config).unwrap();
    let b = solve(&batch, &ledger, &config).unwrap();
    let energies = |s: &SampleSet| s.samples.iter().map(|x| (x.energy, x.ordering.clone())).collect::<Vec<_>>();
    assert_eq!(energies(&a), energies(&b));
    assert_eq!(a.len(), 6);
}

#[test]
fn annealing_finds_the_optimum_of_small_batches() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut hits = 0;
    for k in 0..10 {
        let (legs, start) = pareto_case(&mut rng, 4);
        let (batch, ledger) = (batch_of(&legs), ledger_of(&start));
        let config = SolverConfig::tuned_annealing().with_seed(k).with_samples(20).with_sweeps(2000);
        let set = solve(&batch, &ledger, &config).unwrap();
        if let Some(best) = select_best(&set, &batch, &ledger).unwrap() {
            assert!(best.aggregate_cost.cents() >= oracle_min(&legs, &start));
            hits += usize::from(best.aggregate_cost.cents() == oracle_min(&legs, &start));
        }
    }
    assert!(hits >= 8, "{hits}/10");
}

#[test]
fn selection_reprices_and_keeps_the_earliest_tie() {
    // A pays B $20, B pays A $10, C pays A $5
    let legs = vec![(0, 1, 2000), (1, 0, 1000), (2, 0, 500)];
    let start = vec![(0, 0); 3];
    let (batch, ledger) = (batch_of(&legs), ledger_of(&start));
    let sample = |order: Vec<usize>, claimed: f64| {
        let ordering = Ordering::new(order).unwrap();
        Sample { state: SampleState::Order(ordering.clone()), energy: claimed, ordering: Some(ordering) }
    };
    let set = SampleSet {
        samples: vec![
            sample(vec![0, 1, 2], 0.0),
            sample(vec![1, 2, 0], 9999.0),
            sample(vec![2, 1, 0], 9999.0),
        ],
        stats: Default::default(),
    };
    let best = select_best(&set, &batch, &ledger).unwrap().unwrap();
    assert_eq!(best.aggregate_cost.cents(), oracle_min(&legs, &start));
    assert_eq!(best.ordering.as_slice(), &[1, 2, 0]);
}

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Neighborhood, Sample, SampleSet, SolverConfig, SolverError};
use crate::domain::{Batch, Ordering};
use crate::ledger::{CostEvaluator, Ledger};

/// Steepest-descent over swaps; the first improving swap in `(a, b)` order
/// wins ties. Returns the local optimum's cost.
fn climb(eval: &CostEvaluator, seq: &mut [usize], neighborhood: Neighborhood, scratch: &mut Vec<i64>) -> i64 {
    let n = seq.len();
    let mut current = eval.cost(seq, scratch);
    loop {
        let mut best: Option<(i64, usize, usize)> = None;
        for a in 0..n {
            let range = match neighborhood {
                Neighborhood::AdjacentSwap => a + 1..(a + 2).min(n),
                Neighborhood::AnySwap => a + 1..n,
            };
            for b in range {
                seq.swap(a, b);
                let c = eval.cost(seq, scratch);
                seq.swap(a, b);
                if c < best.map_or(current, |(bc, _, _)| bc) {
                    best = Some((c, a, b));
                }
            }
        }
        match best {
            Some((c, a, b)) => {
                seq.swap(a, b);
                current = c;
            }
            None => return current,
        }
    }
}

/// Random-restart hill climbing in permutation space, priced by the exact
/// ledger. The first restart starts from FIFO, so no sample is worse than
/// FIFO; later restarts start from seeded shuffles.
pub fn solve_local_search(batch: &Batch, start: &Ledger, config: &SolverConfig) -> Result<SampleSet, SolverError> {
    config.validate()?;
    let started = Instant::now();
    let eval = CostEvaluator::new(batch, start)?;
    let n = batch.len();
    let mut scratch = Vec::new();
    let mut samples = Vec::with_capacity(config.num_samples);
    for k in 0..config.num_samples {
        if k > 0 && config.deadline_passed(started) {
            break;
        }
        let mut seq: Vec<usize> = (0..n).collect();
        if k > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            seq.shuffle(&mut rng);
        }
        let cost = climb(&eval, &mut seq, config.neighborhood, &mut scratch);
        let ordering = Ordering::new(seq).expect("swaps preserve permutations");
        samples.push(Sample::from_ordering(ordering, cost));
    }
    Ok(SampleSet::finish(samples, started))
}

//! Single-bit-flip Metropolis annealing over a [`QuboModel`].
//!
//! Moves are plain bit flips, so samples wander through assignments that
//! break the one-hot and balance penalties just as a physical anneal would;
//! feasibility is decided only when the final state is decoded.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Sample, SampleSet, SampleState, SolverConfig, SolverError};
use crate::qubo::{decode_assignment, BinaryAssignment, QuboModel};

/// Geometric temperature schedule, one temperature per sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub temperatures: Vec<f64>,
}

impl Schedule {
    pub fn geometric(initial: f64, last: f64, sweeps: usize) -> Self {
        let temperatures = if sweeps == 1 {
            vec![last]
        } else {
            let ratio = (last / initial).powf(1.0 / (sweeps - 1) as f64);
            (0..sweeps).map(|k| initial * ratio.powi(k as i32)).collect()
        };
        Schedule { temperatures }
    }

    /// Endpoints derived from the model: hot enough that the largest
    /// possible single-flip change is accepted half the time, cold enough
    /// that the smallest coefficient is accepted 1% of the time.
    pub fn for_model(model: &QuboModel, sweeps: usize) -> Self {
        let mut reach = vec![0.0f64; model.num_vars()];
        let mut smallest = f64::INFINITY;
        for (v, c) in model.linear() {
            reach[v] += c.abs();
            smallest = smallest.min(c.abs());
        }
        for &(i, j, c) in model.quadratic() {
            reach[i as usize] += c.abs();
            reach[j as usize] += c.abs();
            smallest = smallest.min(c.abs());
        }
        let largest = reach.iter().copied().fold(0.0, f64::max);
        if largest == 0.0 || !smallest.is_finite() {
            return Schedule::geometric(1.0, 0.1, sweeps);
        }
        let hot = largest / std::f64::consts::LN_2;
        let cold = smallest / 100f64.ln();
        Schedule::geometric(hot.max(cold * 10.0), cold, sweeps)
    }
}

/// Symmetric adjacency in compressed rows.
struct Couplings {
    start: Vec<usize>,
    edges: Vec<(u32, f64)>,
}

impl Couplings {
    fn new(model: &QuboModel) -> Self {
        let nv = model.num_vars();
        let mut degree = vec![0usize; nv + 1];
        for &(i, j, _) in model.quadratic() {
            degree[i as usize + 1] += 1;
            degree[j as usize + 1] += 1;
        }
        for k in 1..=nv {
            degree[k] += degree[k - 1];
        }
        let start = degree.clone();
        let mut fill = degree;
        let total = start[nv];
        let mut edges = vec![(0u32, 0.0); total];
        for &(i, j, c) in model.quadratic() {
            for (a, b) in [(i, j), (j, i)] {
                edges[fill[a as usize]] = (b, c);
                fill[a as usize] += 1;
            }
        }
        Couplings { start, edges }
    }

    fn of(&self, k: usize) -> &[(u32, f64)] {
        &self.edges[self.start[k]..self.start[k + 1]]
    }
}

/// Returns the final bits and the energy tracked along the way.
fn anneal_once(
    model: &QuboModel,
    couplings: &Couplings,
    schedule: &Schedule,
    rng: &mut ChaCha8Rng,
) -> (Vec<u8>, f64) {
    let nv = model.num_vars();
    let mut x: Vec<u8> = (0..nv).map(|_| rng.gen::<bool>() as u8).collect();
    let mut energy = model.energy(&BinaryAssignment { values: x.clone() }).expect("sized to model");
    // field[k] = linear[k] + sum_j Q[k][j] x[j]; flipping k changes the
    // energy by field[k] when k goes 0 -> 1 and by -field[k] otherwise
    let mut field: Vec<f64> = (0..nv).map(|k| model.linear_coefficient(k)).collect();
    for k in 0..nv {
        if x[k] != 0 {
            for &(j, w) in couplings.of(k) {
                field[j as usize] += w;
            }
        }
    }
    for &temperature in &schedule.temperatures {
        let beta = 1.0 / temperature;
        for k in 0..nv {
            let delta = if x[k] == 0 { field[k] } else { -field[k] };
            let accept = delta <= 0.0 || {
                // exp(-30) is below the resolution of the uniform draw
                let z = delta * beta;
                z < 30.0 && rng.gen::<f64>() < (-z).exp()
            };
            if accept {
                let sign = if x[k] == 0 { 1.0 } else { -1.0 };
                x[k] ^= 1;
                energy += delta;
                for &(j, w) in couplings.of(k) {
                    field[j as usize] += sign * w;
                }
            }
        }
    }
    (x, energy)
}

/// `num_samples` independent anneals. Sample `k` draws from its own
/// ChaCha stream of `config.seed`, so results depend only on the seed and
/// the sample index.
pub fn solve_sa(model: &QuboModel, config: &SolverConfig) -> Result<SampleSet, SolverError> {
    config.validate()?;
    let started = Instant::now();
    let schedule = match (config.initial_temperature, config.final_temperature) {
        (Some(hot), Some(cold)) => Schedule::geometric(hot, cold, config.sweeps),
        (hot, cold) => {
            let auto = Schedule::for_model(model, config.sweeps);
            let first = *auto.temperatures.first().expect("sweeps >= 1");
            let last = *auto.temperatures.last().expect("sweeps >= 1");
            Schedule::geometric(hot.unwrap_or(first), cold.unwrap_or(last), config.sweeps)
        }
    };
    let couplings = Couplings::new(model);
    let mut samples = Vec::with_capacity(config.num_samples);
    for k in 0..config.num_samples {
        if k > 0 && config.deadline_passed(started) {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        let (values, _) = anneal_once(model, &couplings, &schedule, &mut rng);
        let assignment = BinaryAssignment { values };
        let energy = model.energy(&assignment)?;
        let ordering = decode_assignment(&assignment, model)?.ordering();
        samples.push(Sample { state: SampleState::Bits(assignment), energy, ordering });
    }
    Ok(SampleSet::finish(samples, started))
}

//! A full payment day: fixed-size batching, one solver call per batch with
//! carried-forward state, the FIFO fallback guard, and the two horse-race
//! scenarios.
//!
//! In a **day race** the FIFO arm and the solver arm each keep their own
//! ledger for the whole day. In a **batch race** both arms restart every
//! batch from a common state; that common state follows the FIFO
//! trajectory, so each batch is judged as if every earlier batch had
//! settled in arrival order.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Batch, Money, Ordering, Payment};
use crate::ledger::{carry, required_liquidity, Ledger, LedgerError, OrderingResult};
use crate::solvers::{select_best, solve, SolverConfig, SolverError};

/// Bumped whenever the manifest layout changes.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("batch size must be at least 1")]
    ZeroBatchSize,
    #[error("payments are not sorted by submission time (payment {0} arrives before its predecessor)")]
    Unsorted(u64),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    DayRace,
    BatchRace,
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "day-race" => Ok(Scenario::DayRace),
            "batch-race" => Ok(Scenario::BatchRace),
            other => Err(format!("unknown scenario `{other}` (day-race, batch-race)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchClassification {
    /// FIFO already needs no extra liquidity.
    NoMndpMovement,
    /// The solver found an ordering strictly cheaper than FIFO.
    Improved,
    /// FIFO needs liquidity and the solver did not beat it.
    NotImprovable,
}

fn default_fallback() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub batch_size: usize,
    pub solver: SolverConfig,
    /// Replace a solver result that is worse than FIFO by FIFO.
    #[serde(default = "default_fallback")]
    pub fallback: bool,
    /// Batches smaller than this settle FIFO without calling the solver.
    /// Defaults to `batch_size`, so only the undersized final batch is
    /// affected.
    #[serde(default)]
    pub min_solve_size: Option<usize>,
    /// Fixed solver latency added to every batch's delay, in milliseconds.
    #[serde(default)]
    pub synthetic_delay_ms: i64,
}

impl RunConfig {
    pub fn new(scenario: Scenario, batch_size: usize, solver: SolverConfig) -> Self {
        RunConfig { scenario, batch_size, solver, fallback: true, min_solve_size: None, synthetic_delay_ms: 0 }
    }

    fn min_solve_size(&self) -> usize {
        self.min_solve_size.unwrap_or(self.batch_size)
    }
}

/// One batch of a day run, as written to the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub index: usize,
    /// Offset of the batch's first payment in the day.
    pub first_payment: usize,
    pub size: usize,
    pub value: Money,
    pub wait_time_ms: i64,
    pub synthetic_delay_ms: i64,
    /// Settled FIFO without a solver call because it was undersized.
    pub tail: bool,
    /// FIFO cost from the solver arm's start state.
    pub fifo_cost: Money,
    /// Best feasible solver proposal, before the guard.
    pub solver_cost: Option<Money>,
    pub solver_order: Option<Vec<usize>>,
    pub chosen_cost: Money,
    pub chosen_order: Vec<usize>,
    /// The guard replaced a worse solver result by FIFO.
    pub fell_back: bool,
    pub classification: BatchClassification,
    pub num_samples: usize,
    pub num_feasible: usize,
    pub solver_error: Option<String>,
}

impl BatchRecord {
    /// FIFO cost minus chosen cost from the same start state.
    pub fn savings(&self) -> Money {
        self.fifo_cost - self.chosen_cost
    }

    /// The solver proposal was strictly worse than FIFO.
    pub fn worsened(&self) -> bool {
        self.solver_cost.is_some_and(|c| c > self.fifo_cost)
    }
}

/// Result of [`run_day`]. Everything except `solve_times_secs` is a pure
/// function of the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRun {
    pub config: RunConfig,
    pub batches: Vec<Batch>,
    pub records: Vec<BatchRecord>,
    pub start: Ledger,
    pub fifo_end: Ledger,
    pub solver_end: Ledger,
    /// Wall-clock time spent in the solver per batch.
    pub solve_times_secs: Vec<f64>,
}

/// Splits time-ordered payments into consecutive windows of `batch_size`;
/// the remainder forms a final, smaller batch.
pub fn accumulate_batches(payments: &[Payment], batch_size: usize) -> Result<Vec<Batch>, PipelineError> {
    if batch_size == 0 {
        return Err(PipelineError::ZeroBatchSize);
    }
    if let Some(w) = payments.windows(2).find(|w| w[1].submitted_at < w[0].submitted_at) {
        return Err(PipelineError::Unsorted(w[1].id));
    }
    Ok(payments.chunks(batch_size).enumerate().map(|(k, chunk)| Batch::new(k, chunk.to_vec())).collect())
}

pub fn classify_batch(fifo: &OrderingResult, solver: Option<&OrderingResult>) -> BatchClassification {
    if fifo.aggregate_cost == Money::ZERO {
        BatchClassification::NoMndpMovement
    } else if solver.is_some_and(|s| s.aggregate_cost < fifo.aggregate_cost) {
        BatchClassification::Improved
    } else {
        BatchClassification::NotImprovable
    }
}

/// Picks the result to settle: the proposal unless there is none, or the
/// guard is on and the proposal costs more than FIFO. The flag reports a
/// guard intervention.
pub fn guard(fifo: &OrderingResult, proposal: Option<&OrderingResult>, fallback: bool) -> (OrderingResult, bool) {
    match proposal {
        Some(p) if fallback && p.aggregate_cost > fifo.aggregate_cost => (fifo.clone(), true),
        Some(p) => (p.clone(), false),
        None => (fifo.clone(), false),
    }
}

/// Mixes the run seed with the batch index so batches draw independent
/// streams while the whole day stays reproducible.
fn batch_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Outcome {
    record: BatchRecord,
    chosen: OrderingResult,
    solve_time: f64,
}

fn settle_batch(batch: &Batch, first_payment: usize, start: &Ledger, config: &RunConfig) -> Result<Outcome, PipelineError> {
    let fifo = required_liquidity(batch, &Ordering::identity(batch.len()), start)?;
    let tail = batch.len() < config.min_solve_size();

    let mut solver_error = None;
    let mut proposal = None;
    let (mut num_samples, mut num_feasible, mut solve_time) = (0, 0, 0.0);
    if !tail {
        let solver = config.solver.clone().with_seed(batch_seed(config.solver.seed, batch.index));
        let started = Instant::now();
        let attempt = solve(batch, start, &solver)
            .map_err(|e| e.to_string())
            .and_then(|set| {
                num_samples = set.len();
                num_feasible = set.stats.num_feasible;
                select_best(&set, batch, start).map_err(|e| e.to_string())
            });
        solve_time = started.elapsed().as_secs_f64();
        match attempt {
            Ok(best) => proposal = best,
            Err(e) => {
                log::warn!("batch {}: solver failed ({e}); settling FIFO", batch.index);
                solver_error = Some(e);
            }
        }
        if proposal.is_none() && solver_error.is_none() {
            log::info!("batch {}: no feasible sample; settling FIFO", batch.index);
        }
    }

    let classification = if tail { classify_batch(&fifo, Some(&fifo)) } else { classify_batch(&fifo, proposal.as_ref()) };
    let (chosen, fell_back) = guard(&fifo, proposal.as_ref(), config.fallback);
    let record = BatchRecord {
        index: batch.index,
        first_payment,
        size: batch.len(),
        value: batch.total_value(),
        wait_time_ms: batch.wait_time_ms(),
        synthetic_delay_ms: config.synthetic_delay_ms,
        tail,
        fifo_cost: fifo.aggregate_cost,
        solver_cost: proposal.as_ref().map(|p| p.aggregate_cost),
        solver_order: proposal.as_ref().map(|p| p.ordering.as_slice().to_vec()),
        chosen_cost: chosen.aggregate_cost,
        chosen_order: chosen.ordering.as_slice().to_vec(),
        fell_back,
        classification,
        num_samples,
        num_feasible,
        solver_error,
    };
    Ok(Outcome { record, chosen, solve_time })
}

/// Simulates a day of `payments` from `start` under `config`.
pub fn run_day(payments: &[Payment], start: &Ledger, config: &RunConfig) -> Result<DayRun, PipelineError> {
    config.solver.validate()?;
    let batches = accumulate_batches(payments, config.batch_size)?;
    let mut fifo_ledger = start.clone();
    let mut solver_ledger = start.clone();
    let mut records = Vec::with_capacity(batches.len());
    let mut solve_times = Vec::with_capacity(batches.len());
    let mut first_payment = 0;
    for batch in &batches {
        fifo_ledger.check_batch(batch)?;
        let arm_start = match config.scenario {
            Scenario::DayRace => &solver_ledger,
            Scenario::BatchRace => &fifo_ledger,
        };
        let outcome = settle_batch(batch, first_payment, arm_start, config)?;
        let fifo_from_own =
            required_liquidity(batch, &Ordering::identity(batch.len()), &fifo_ledger)?;
        let next_solver = carry(batch, &outcome.chosen, arm_start);
        fifo_ledger = carry(batch, &fifo_from_own, &fifo_ledger);
        solver_ledger = next_solver;
        first_payment += batch.len();
        solve_times.push(outcome.solve_time);
        records.push(outcome.record);
    }
    Ok(DayRun {
        config: config.clone(),
        batches,
        records,
        start: start.clone(),
        fifo_end: fifo_ledger,
        solver_end: solver_ledger,
        solve_times_secs: solve_times,
    })
}

/// Everything needed to recompute a run's report: inputs, per-batch
/// decisions and end-of-day states. Wall-clock times are deliberately left
/// out so identical runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config: RunConfig,
    pub participants: Vec<String>,
    pub payments: Vec<Payment>,
    pub start: Ledger,
    pub batches: Vec<BatchRecord>,
    pub fifo_end: Ledger,
    pub solver_end: Ledger,
}

impl RunManifest {
    pub fn new(run: &DayRun, participants: Vec<String>) -> Self {
        RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config: run.config.clone(),
            participants,
            payments: run.batches.iter().flat_map(|b| b.payments.iter().cloned()).collect(),
            start: run.start.clone(),
            batches: run.records.clone(),
            fifo_end: run.fifo_end.clone(),
            solver_end: run.solver_end.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The payments of batch `k`.
    pub fn batch(&self, k: usize) -> Option<Batch> {
        let r = self.batches.get(k)?;
        Some(Batch::new(r.index, self.payments[r.first_payment..r.first_payment + r.size].to_vec()))
    }
}

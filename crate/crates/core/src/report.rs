//! Summary tables and plot-ready series, computed from a [`RunManifest`]
//! alone.
//!
//! The manifest is replayed through the ledger rather than trusted: every
//! batch's FIFO and chosen costs are recomputed from the payments and the
//! recorded orders, and a mismatch with the recorded numbers is an error.
//!
//! In a batch race the solver arm restarts every batch from the FIFO
//! trajectory, so its own mNDP would jump back at batch boundaries. Its
//! mndp-vs-time series therefore shows the FIFO trajectory minus the savings
//! banked by earlier batches, which is continuous and non-decreasing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Batch, Money, Ordering, ParticipantId};
use crate::ledger::{carry, net_position_series, required_liquidity, Ledger, LedgerError, OrderingResult};
use crate::pipeline::{BatchClassification, RunManifest, Scenario, MANIFEST_SCHEMA_VERSION};

/// Decimal places used for every share and correlation.
pub const SHARE_DECIMALS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("manifest schema {found} is not supported (expected {MANIFEST_SCHEMA_VERSION})")]
    Schema { found: u32 },
    #[error("batch {batch}: {what}")]
    Inconsistent { batch: usize, what: String },
    #[error("batch index {index} out of range ({count} batches)")]
    BatchOutOfRange { index: usize, count: usize },
    #[error("series `{0}` needs a batch index")]
    MissingBatch(SeriesKind),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    MndpVsTime,
    BatchBalances,
    MndpChangeBars,
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SeriesKind::MndpVsTime => "mndp-vs-time",
            SeriesKind::BatchBalances => "batch-balances",
            SeriesKind::MndpChangeBars => "mndp-change-bars",
        })
    }
}

impl std::str::FromStr for SeriesKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mndp-vs-time" => Ok(SeriesKind::MndpVsTime),
            "batch-balances" => Ok(SeriesKind::BatchBalances),
            "mndp-change-bars" => Ok(SeriesKind::MndpChangeBars),
            other => Err(format!("unknown series `{other}` (mndp-vs-time, batch-balances, mndp-change-bars)")),
        }
    }
}

/// The day-level numbers of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCells {
    pub value_settled: Money,
    pub total_batches: usize,
    pub improved_batches: usize,
    pub no_mndp_movement_batches: usize,
    pub not_improvable_batches: usize,
    /// Solver proposals strictly worse than FIFO.
    pub worsened_batches: usize,
    /// Batches where the guard settled FIFO instead.
    pub fallback_batches: usize,
    pub tail_batches: usize,
    pub solver_failures: usize,
    /// FIFO-arm minus solver-arm aggregate mNDP at the close; day race only.
    pub end_of_day_savings: Option<Money>,
    pub total_batch_savings: Money,
    pub mean_improved_savings_cents: Option<f64>,
    pub median_improved_savings_cents: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantReport {
    pub participant: ParticipantId,
    pub name: String,
    pub savings: Money,
    pub incoming: Money,
    pub outgoing: Money,
    /// `None` when the day saved nothing.
    pub savings_share: Option<f64>,
    pub incoming_share: Option<f64>,
    pub outgoing_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub share_decimals: u32,
    pub cells: TableCells,
    pub participants: Vec<ParticipantReport>,
    /// Pearson r between savings share and incoming share over active
    /// participants; `None` when undefined.
    pub savings_vs_incoming_r: Option<f64>,
    pub savings_vs_outgoing_r: Option<f64>,
}

/// One batch as seen by the replay.
struct Replayed {
    batch: Batch,
    /// Start state both orderings of this batch are priced from.
    start: Ledger,
    fifo: OrderingResult,
    chosen: OrderingResult,
}

fn replay(manifest: &RunManifest) -> Result<(Vec<Replayed>, Ledger, Ledger), ReportError> {
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(ReportError::Schema { found: manifest.schema_version });
    }
    let mut fifo_arm = manifest.start.clone();
    let mut solver_arm = manifest.start.clone();
    let mut out = Vec::with_capacity(manifest.batches.len());
    let mut expected_first = 0;
    for (k, record) in manifest.batches.iter().enumerate() {
        let bad = |what: String| ReportError::Inconsistent { batch: k, what };
        if record.first_payment != expected_first || record.first_payment + record.size > manifest.payments.len() {
            return Err(bad("payment range does not follow the previous batch".into()));
        }
        expected_first += record.size;
        let batch = manifest.batch(k).expect("range checked");
        let start = match manifest.config.scenario {
            Scenario::DayRace => solver_arm.clone(),
            Scenario::BatchRace => fifo_arm.clone(),
        };
        let fifo = required_liquidity(&batch, &Ordering::identity(batch.len()), &start)?;
        let order = Ordering::new(record.chosen_order.clone()).map_err(|e| bad(e.to_string()))?;
        let chosen = required_liquidity(&batch, &order, &start)?;
        if fifo.aggregate_cost != record.fifo_cost {
            return Err(bad(format!("recorded FIFO cost {} but replay gives {}", record.fifo_cost, fifo.aggregate_cost)));
        }
        if chosen.aggregate_cost != record.chosen_cost {
            return Err(bad(format!(
                "recorded chosen cost {} but replay gives {}",
                record.chosen_cost, chosen.aggregate_cost
            )));
        }
        let own_fifo = required_liquidity(&batch, &Ordering::identity(batch.len()), &fifo_arm)?;
        solver_arm = carry(&batch, &chosen, &start);
        fifo_arm = carry(&batch, &own_fifo, &fifo_arm);
        out.push(Replayed { batch, start, fifo, chosen });
    }
    if expected_first != manifest.payments.len() {
        return Err(ReportError::Inconsistent { batch: manifest.batches.len(), what: "payments left unbatched".into() });
    }
    Ok((out, fifo_arm, solver_arm))
}

fn round_share(x: f64) -> f64 {
    let scale = 10f64.powi(SHARE_DECIMALS as i32);
    (x * scale).round() / scale
}

/// Pearson correlation; `None` with fewer than two points or no variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

/// Recomputes the day's table, per-participant shares and correlations.
pub fn report_day(manifest: &RunManifest) -> Result<RunReport, ReportError> {
    let (replayed, fifo_end, solver_end) = replay(manifest)?;
    if fifo_end != manifest.fifo_end || solver_end != manifest.solver_end {
        return Err(ReportError::Inconsistent {
            batch: manifest.batches.len(),
            what: "recorded end-of-day ledgers differ from the replay".into(),
        });
    }
    let records = &manifest.batches;
    let count = |c: BatchClassification| records.iter().filter(|r| r.classification == c).count();
    let mut improved: Vec<f64> = records
        .iter()
        .filter(|r| r.classification == BatchClassification::Improved)
        .map(|r| r.savings().cents() as f64)
        .collect();
    improved.sort_by(f64::total_cmp);
    let cells = TableCells {
        value_settled: manifest.payments.iter().map(|p| p.value).sum(),
        total_batches: records.len(),
        improved_batches: count(BatchClassification::Improved),
        no_mndp_movement_batches: count(BatchClassification::NoMndpMovement),
        not_improvable_batches: count(BatchClassification::NotImprovable),
        worsened_batches: records.iter().filter(|r| r.worsened()).count(),
        fallback_batches: records.iter().filter(|r| r.fell_back).count(),
        tail_batches: records.iter().filter(|r| r.tail).count(),
        solver_failures: records.iter().filter(|r| r.solver_error.is_some()).count(),
        end_of_day_savings: (manifest.config.scenario == Scenario::DayRace)
            .then(|| fifo_end.aggregate_mndp() - solver_end.aggregate_mndp()),
        total_batch_savings: records.iter().map(|r| r.savings()).sum(),
        mean_improved_savings_cents: (!improved.is_empty())
            .then(|| improved.iter().sum::<f64>() / improved.len() as f64),
        median_improved_savings_cents: median(&improved),
    };

    let m = manifest.start.len();
    let mut savings = vec![Money::ZERO; m];
    for r in &replayed {
        for (a, s) in savings.iter_mut().enumerate() {
            *s += r.fifo.required_liquidity[a] - r.chosen.required_liquidity[a];
        }
    }
    let mut incoming = vec![Money::ZERO; m];
    let mut outgoing = vec![Money::ZERO; m];
    for p in &manifest.payments {
        outgoing[p.payer.index()] += p.value;
        incoming[p.payee.index()] += p.value;
    }
    let total_savings: Money = savings.iter().copied().sum();
    let total_value = cells.value_settled;
    let share = |x: Money, total: Money| (total != Money::ZERO).then(|| x.cents() as f64 / total.cents() as f64);

    let mut participants = Vec::with_capacity(m);
    let (mut xs, mut ins, mut outs) = (Vec::new(), Vec::new(), Vec::new());
    for a in 0..m {
        let s = share(savings[a], total_savings);
        let i = share(incoming[a], total_value);
        let o = share(outgoing[a], total_value);
        if let (Some(s), Some(i), Some(o)) = (s, i, o) {
            if incoming[a] + outgoing[a] != Money::ZERO {
                xs.push(s);
                ins.push(i);
                outs.push(o);
            }
        }
        participants.push(ParticipantReport {
            participant: ParticipantId(a as u32),
            name: manifest.participants.get(a).cloned().unwrap_or_else(|| a.to_string()),
            savings: savings[a],
            incoming: incoming[a],
            outgoing: outgoing[a],
            savings_share: s.map(round_share),
            incoming_share: i.map(round_share),
            outgoing_share: o.map(round_share),
        });
    }
    Ok(RunReport {
        scenario: manifest.config.scenario,
        share_decimals: SHARE_DECIMALS,
        cells,
        savings_vs_incoming_r: pearson(&xs, &ins).map(round_share),
        savings_vs_outgoing_r: pearson(&xs, &outs).map(round_share),
        participants,
    })
}

/// Aggregate mNDP after each settlement when `batch` settles in `order`
/// from `start`.
fn running_aggregate(batch: &Batch, order: &[usize], start: &Ledger) -> Vec<Money> {
    let mut available: Vec<Money> = start.states().iter().map(|s| s.available()).collect();
    let mut aggregate = start.aggregate_mndp();
    let mut out = Vec::with_capacity(order.len());
    for &i in order {
        let p = &batch.payments[i];
        available[p.payer.index()] -= p.value;
        available[p.payee.index()] += p.value;
        let short = available[p.payer.index()];
        if short < Money::ZERO {
            // top the payer up to zero; the top-ups add up to its new mNDP
            aggregate -= short;
            available[p.payer.index()] = Money::ZERO;
        }
        out.push(aggregate);
    }
    out
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Plot data as CSV. `batch` selects the batch for `batch-balances`.
pub fn emit_series(manifest: &RunManifest, kind: SeriesKind, batch: Option<usize>) -> Result<String, ReportError> {
    let (replayed, _, _) = replay(manifest)?;
    let name = |p: ParticipantId| manifest.participants.get(p.index()).cloned().unwrap_or_else(|| p.to_string());
    match kind {
        SeriesKind::MndpVsTime => {
            let mut rows = Vec::new();
            let mut event = 0;
            let mut fifo_arm = manifest.start.clone();
            let mut banked = Money::ZERO;
            for (r, record) in replayed.iter().zip(&manifest.batches) {
                let n = r.batch.len();
                let settled_at = r.batch.payments.last().map_or(0, |p| p.submitted_at.millis()) + record.synthetic_delay_ms;
                let fifo_series = running_aggregate(&r.batch, &(0..n).collect::<Vec<_>>(), &fifo_arm);
                let solver_series: Vec<Money> = match manifest.config.scenario {
                    Scenario::DayRace => running_aggregate(&r.batch, &record.chosen_order, &r.start),
                    Scenario::BatchRace => running_aggregate(&r.batch, &record.chosen_order, &r.start)
                        .into_iter()
                        .map(|v| v - banked)
                        .collect(),
                };
                for t in 0..n {
                    event += 1;
                    rows.push(vec![
                        event.to_string(),
                        r.batch.index.to_string(),
                        settled_at.to_string(),
                        fifo_series[t].cents().to_string(),
                        solver_series[t].cents().to_string(),
                    ]);
                }
                banked += record.savings();
                let own = required_liquidity(&r.batch, &Ordering::identity(n), &fifo_arm)?;
                fifo_arm = carry(&r.batch, &own, &fifo_arm);
            }
            Ok(csv_text(&["event", "batch", "settled_at_ms", "fifo_aggregate_mndp", "solver_aggregate_mndp"], rows))
        }
        SeriesKind::BatchBalances => {
            let index = batch.ok_or(ReportError::MissingBatch(kind))?;
            let r = replayed
                .get(index)
                .ok_or(ReportError::BatchOutOfRange { index, count: replayed.len() })?;
            let n = r.batch.len();
            let fifo = net_position_series(&r.batch, &Ordering::identity(n), &r.start)?;
            let chosen = net_position_series(&r.batch, &r.chosen.ordering, &r.start)?;
            let mut rows = Vec::new();
            for p in r.batch.participants() {
                for t in 0..=n {
                    rows.push(vec![
                        name(p),
                        t.to_string(),
                        fifo[p.index()][t].cents().to_string(),
                        chosen[p.index()][t].cents().to_string(),
                    ]);
                }
            }
            Ok(csv_text(&["participant", "position", "fifo_net_position", "solver_net_position"], rows))
        }
        SeriesKind::MndpChangeBars => {
            let mut rows = Vec::new();
            for r in &replayed {
                for p in r.batch.participants() {
                    rows.push(vec![
                        r.batch.index.to_string(),
                        name(p),
                        r.fifo.liquidity_of(p).cents().to_string(),
                        r.chosen.liquidity_of(p).cents().to_string(),
                    ]);
                }
            }
            Ok(csv_text(&["batch", "participant", "fifo_mndp_change", "solver_mndp_change"], rows))
        }
    }
}

/// One row per batch with its costs and decisions.
pub fn batches_csv(manifest: &RunManifest) -> String {
    let rows = manifest
        .batches
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.size.to_string(),
                r.value.cents().to_string(),
                r.wait_time_ms.to_string(),
                r.synthetic_delay_ms.to_string(),
                r.fifo_cost.cents().to_string(),
                r.solver_cost.map_or(String::new(), |c| c.cents().to_string()),
                r.chosen_cost.cents().to_string(),
                r.savings().cents().to_string(),
                serde_json::to_value(r.classification).expect("enum").as_str().expect("string").to_string(),
                r.fell_back.to_string(),
                r.tail.to_string(),
            ]
        })
        .collect();
    csv_text(
        &[
            "batch",
            "size",
            "value",
            "wait_time_ms",
            "synthetic_delay_ms",
            "fifo_cost",
            "solver_cost",
            "chosen_cost",
            "savings",
            "classification",
            "fell_back",
            "tail",
        ],
        rows,
    )
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.*}", SHARE_DECIMALS as usize))
}

/// One row per participant; undefined shares are empty cells.
pub fn participants_csv(report: &RunReport) -> String {
    let rows = report
        .participants
        .iter()
        .map(|p| {
            vec![
                p.name.clone(),
                p.savings.cents().to_string(),
                p.incoming.cents().to_string(),
                p.outgoing.cents().to_string(),
                opt(p.savings_share),
                opt(p.incoming_share),
                opt(p.outgoing_share),
            ]
        })
        .collect();
    csv_text(
        &["participant", "savings", "incoming", "outgoing", "savings_share", "incoming_share", "outgoing_share"],
        rows,
    )
}

/// Human-readable summary.
pub fn render_summary(report: &RunReport) -> String {
    let c = &report.cells;
    let mut table = BTreeMap::new();
    table.insert("1 value settled", c.value_settled.to_string());
    table.insert("2 batches", c.total_batches.to_string());
    table.insert("3 improved batches", c.improved_batches.to_string());
    table.insert("4 no mNDP movement", c.no_mndp_movement_batches.to_string());
    table.insert("5 not improvable", c.not_improvable_batches.to_string());
    table.insert("6 worsened (guarded)", format!("{} ({})", c.worsened_batches, c.fallback_batches));
    table.insert(
        "7 end-of-day savings",
        c.end_of_day_savings.map_or("n/a (batch race)".into(), |s| s.to_string()),
    );
    table.insert("8 total batch savings", c.total_batch_savings.to_string());
    table.insert(
        "9 mean / median improved",
        match (c.mean_improved_savings_cents, c.median_improved_savings_cents) {
            (Some(a), Some(m)) => format!(
                "{} / {}",
                Money::from_cents(a.round() as i64),
                Money::from_cents(m.round() as i64)
            ),
            _ => "n/a".into(),
        },
    );
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", serde_json::to_value(report.scenario).expect("enum").as_str().expect("string"));
    for (k, v) in table {
        let _ = writeln!(out, "  {:<26} {v}", &k[2..]);
    }
    let r = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.3}"));
    let _ = writeln!(
        out,
        "  savings share vs incoming r = {}, vs outgoing r = {}",
        r(report.savings_vs_incoming_r),
        r(report.savings_vs_outgoing_r)
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Payment, Timestamp};
    use crate::pipeline::{run_day, RunConfig};
    use crate::solvers::{SolverConfig, SolverKind};

    fn pay(id: u64, from: u32, to: u32, cents: i64, at: i64) -> Payment {
        Payment::new(id, ParticipantId(from), ParticipantId(to), Money::from_cents(cents), Timestamp(at)).unwrap()
    }

    fn manifest(kind: SolverKind, scenario: Scenario) -> RunManifest {
        let payments = vec![
            pay(0, 0, 1, 1000, 0),
            pay(1, 2, 0, 1000, 5),
            pay(2, 1, 2, 300, 9),
            pay(3, 2, 1, 200, 12),
            pay(4, 1, 0, 50, 20),
        ];
        let run = run_day(&payments, &Ledger::zeroed(3), &RunConfig::new(scenario, 2, SolverConfig::new(kind))).unwrap();
        RunManifest::new(&run, vec!["A".into(), "B".into(), "C".into()])
    }

    #[test]
    fn fifo_day_saves_nothing() {
        let report = report_day(&manifest(SolverKind::Fifo, Scenario::DayRace)).unwrap();
        assert_eq!(report.cells.improved_batches, 0);
        assert_eq!(report.cells.end_of_day_savings, Some(Money::ZERO));
        assert!(report.participants.iter().all(|p| p.savings_share.is_none()));
        assert_eq!(report.savings_vs_incoming_r, None);
    }

    #[test]
    fn exact_day_table() {
        let report = report_day(&manifest(SolverKind::Exact, Scenario::DayRace)).unwrap();
        let c = &report.cells;
        assert_eq!(c.value_settled, Money::from_cents(2550));
        assert_eq!((c.total_batches, c.improved_batches, c.tail_batches), (3, 1, 1));
        assert_eq!(c.end_of_day_savings, Some(Money::from_cents(1000)));
        assert_eq!(c.median_improved_savings_cents, Some(1000.0));
        // only A saves: its outflow now waits for C's inflow
        assert_eq!(report.participants[0].savings_share, Some(1.0));
        assert_eq!(report.participants[0].savings, Money::from_cents(1000));
    }

    #[test]
    fn tampered_manifest_is_rejected() {
        let mut m = manifest(SolverKind::Exact, Scenario::DayRace);
        m.batches[0].chosen_cost = Money::from_cents(1);
        assert!(matches!(report_day(&m), Err(ReportError::Inconsistent { batch: 0, .. })));
    }

    #[test]
    fn series_shapes() {
        for scenario in [Scenario::DayRace, Scenario::BatchRace] {
            let m = manifest(SolverKind::Exact, scenario);
            let text = emit_series(&m, SeriesKind::MndpVsTime, None).unwrap();
            let rows: Vec<Vec<i64>> = text
                .lines()
                .skip(1)
                .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
                .collect();
            assert_eq!(rows.len(), 5);
            for w in rows.windows(2) {
                assert!(w[1][3] >= w[0][3] && w[1][4] >= w[0][4], "{text}");
            }

            let balances = emit_series(&m, SeriesKind::BatchBalances, Some(0)).unwrap();
            assert_eq!(balances.lines().count() - 1, 3 * 3);
            assert!(matches!(
                emit_series(&m, SeriesKind::BatchBalances, Some(9)),
                Err(ReportError::BatchOutOfRange { index: 9, count: 3 })
            ));
            assert!(emit_series(&m, SeriesKind::BatchBalances, None).is_err());

            let bars = emit_series(&m, SeriesKind::MndpChangeBars, None).unwrap();
            let mut per_batch = BTreeMap::new();
            for l in bars.lines().skip(1) {
                let f: Vec<&str> = l.split(',').collect();
                *per_batch.entry(f[0].parse::<usize>().unwrap()).or_insert(0) += f[3].parse::<i64>().unwrap();
            }
            for r in &m.batches {
                assert_eq!(per_batch.get(&r.index).copied().unwrap_or(0), r.chosen_cost.cents());
            }
        }
    }

    #[test]
    fn pearson_basics() {
        assert_eq!(pearson(&[1.0], &[2.0]), None);
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 3.0]), None);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
    }
}

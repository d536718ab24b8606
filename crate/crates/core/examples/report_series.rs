//! Runs a short day, writes its manifest, and produces the summary table
//! and plot series from the manifest alone.

use paysort::data::{generate_day, SyntheticDayConfig};
use paysort::pipeline::{run_day, RunConfig, RunManifest, Scenario};
use paysort::report::{emit_series, render_summary, report_day, SeriesKind};
use paysort::solvers::{SolverConfig, SolverKind};

fn main() {
    let day = generate_day(&SyntheticDayConfig::new(6, 400, 2)).unwrap();
    let config = RunConfig::new(Scenario::DayRace, 25, SolverConfig::new(SolverKind::LocalSearch));
    let run = run_day(&day.payments, &day.start_ledger(), &config).unwrap();
    let json = RunManifest::new(&run, day.participants.clone()).to_json();

    let manifest = RunManifest::from_json(&json).unwrap();
    print!("{}", render_summary(&report_day(&manifest).unwrap()));

    let series = emit_series(&manifest, SeriesKind::MndpVsTime, None).unwrap();
    println!("\nmndp-vs-time, last rows:");
    let lines: Vec<&str> = series.lines().collect();
    println!("{}", lines[0]);
    for line in &lines[lines.len().saturating_sub(3)..] {
        println!("{line}");
    }
    let bars = emit_series(&manifest, SeriesKind::BatchBalances, Some(0)).unwrap();
    println!("\nbatch-balances for batch 0: {} rows", bars.lines().count() - 1);
}

//! The `paysort` command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::data::{generate_day, load_day, save_day, SyntheticDayConfig};
use crate::pipeline::{run_day, RunConfig, RunManifest, Scenario};
use crate::report::{batches_csv, emit_series, participants_csv, render_summary, report_day, SeriesKind};
use crate::solvers::{SolverConfig, SolverKind};
use crate::verify::run_checks;

#[derive(Debug, Parser)]
#[command(name = "paysort", version, about = "Liquidity-saving reordering of payment batches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic payment day as CSV.
    Generate(GenerateArgs),
    /// Simulate a day: batch, solve, settle, and write a run manifest.
    Run(RunArgs),
    /// Summarize a run manifest and export plot data.
    Report(ReportArgs),
    /// Check the library against independent recomputations and fixtures.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// TOML file with a synthetic day config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub participants: Option<usize>,
    /// Expected number of payments.
    #[arg(long)]
    pub volume: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Payment day CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// TOML file with a run config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// day-race or batch-race.
    #[arg(long)]
    pub scenario: Option<Scenario>,
    /// exact, sa-qubo, local-search or fifo.
    #[arg(long)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Keep solver results even when they are worse than FIFO.
    #[arg(long)]
    pub no_fallback: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write report.json and the CSV tables and series.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Print one series to stdout instead of the summary.
    #[arg(long)]
    pub series: Option<SeriesKind>,
    /// Batch for the batch-balances series.
    #[arg(long)]
    pub batch: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Directory holding expected.toml and its CSV fixtures.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => read_toml(path)?,
        None => SyntheticDayConfig::new(20, 23_000, 0),
    };
    if let Some(p) = args.participants {
        config.num_participants = p;
    }
    if let Some(v) = args.volume {
        config.target_volume = v;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let day = generate_day(&config)?;
    save_day(&day, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("{} payments, {} participants, {} -> {}", day.payments.len(), day.participants.len(), day.total_value(), args.out.display());
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => read_toml(path)?,
        None => RunConfig::new(Scenario::DayRace, 70, SolverConfig::new(SolverKind::LocalSearch)),
    };
    if let Some(n) = args.batch_size {
        config.batch_size = n;
    }
    if let Some(s) = args.scenario {
        config.scenario = s;
    }
    if let Some(k) = args.solver {
        config.solver.kind = k;
    }
    if let Some(s) = args.seed {
        config.solver.seed = s;
    }
    if let Some(s) = args.samples {
        config.solver.num_samples = s;
    }
    if let Some(s) = args.sweeps {
        config.solver.sweeps = s;
    }
    if args.no_fallback {
        config.fallback = false;
    }
    let day = load_day(&args.input).with_context(|| format!("loading {}", args.input.display()))?;
    let run = run_day(&day.payments, &day.start_ledger(), &config)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let manifest = RunManifest::new(&run, day.participants.clone());
    write(&args.out_dir.join("manifest.json"), manifest.to_json())?;

    let mut timings = String::from("batch,wait_time_ms,synthetic_delay_ms,solve_time_secs\n");
    for (r, t) in run.records.iter().zip(&run.solve_times_secs) {
        timings.push_str(&format!("{},{},{},{t:.6}\n", r.index, r.wait_time_ms, r.synthetic_delay_ms));
    }
    write(&args.out_dir.join("timings.csv"), timings)?;
    print!("{}", render_summary(&report_day(&manifest)?));
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?;
    let manifest = RunManifest::from_json(&text).with_context(|| format!("parsing {}", args.manifest.display()))?;
    if let Some(kind) = args.series {
        print!("{}", emit_series(&manifest, kind, args.batch)?);
        return Ok(());
    }
    let report = report_day(&manifest)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
        write(&dir.join("batches.csv"), batches_csv(&manifest))?;
        write(&dir.join("participants.csv"), participants_csv(&report))?;
        for kind in [SeriesKind::MndpVsTime, SeriesKind::MndpChangeBars] {
            write(&dir.join(format!("{kind}.csv")), emit_series(&manifest, kind, None)?)?;
        }
        if let Some(b) = args.batch {
            write(&dir.join(format!("batch-balances-{b}.csv")), emit_series(&manifest, SeriesKind::BatchBalances, Some(b))?)?;
        }
    }
    print!("{}", render_summary(&report));
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let fixtures = args.fixtures.or_else(|| {
        let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        shipped.is_dir().then_some(shipped)
    });
    let outcomes = run_checks(args.seed, fixtures.as_deref());
    let mut failed = 0;
    for c in &outcomes {
        println!("{} {:<32} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        bail!("{failed} of {} checks failed", outcomes.len());
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::Verify(a) => verify(a),
    }
}

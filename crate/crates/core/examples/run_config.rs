//! A run driven by TOML, as `paysort run --config` does it.

use paysort::data::{generate_day, SyntheticDayConfig};
use paysort::pipeline::{run_day, RunConfig};

const RUN: &str = r#"
scenario = "batch-race"
batch-size = 12
min-solve-size = 6

[solver]
kind = "sa-qubo"
num-samples = 8
sweeps = 1500
seed = 3
lambda-balance = 0.005
one-hot-scale = 0.5
"#;

const DAY: &str = r#"
num-participants = 5
target-volume = 120
value-scale = 100
max-value = 20000
seed = 9
"#;

fn main() {
    let day_config: SyntheticDayConfig = toml::from_str(DAY).unwrap();
    let run_config: RunConfig = toml::from_str(RUN).unwrap();
    let day = generate_day(&day_config).unwrap();
    let run = run_day(&day.payments, &day.start_ledger(), &run_config).unwrap();
    for r in &run.records {
        println!(
            "batch {:>2}: {:>2} payments, FIFO {:>9}, chosen {:>9}, {}/{} samples feasible{}",
            r.index,
            r.size,
            r.fifo_cost.to_string(),
            r.chosen_cost.to_string(),
            r.num_feasible,
            r.num_samples,
            if r.fell_back { ", fell back" } else { "" }
        );
    }
}

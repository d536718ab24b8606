//! Generates a synthetic payment day, summarizes it and writes it as CSV.

use paysort::data::{generate_day, hill_estimator, save_day, SyntheticDayConfig};

fn main() {
    let mut config = SyntheticDayConfig::new(20, 23_000, 42);
    config.payer_weights = Some((0..20).map(|k| if k < 5 { 4.0 } else { 1.0 }).collect());
    let day = generate_day(&config).unwrap();
    println!("{} payments among {} participants, {} in total", day.payments.len(), day.participants.len(), day.total_value());

    let mut per_hour = vec![0usize; (config.close_hour - config.open_hour) as usize];
    for p in &day.payments {
        per_hour[(p.submitted_at.millis() / 3_600_000) as usize - config.open_hour as usize] += 1;
    }
    for (h, count) in per_hour.iter().enumerate() {
        println!("{:02}:00 {:>5} {}", config.open_hour as usize + h, count, "#".repeat(count / 100));
    }

    let values: Vec<f64> = day.payments.iter().map(|p| p.value.cents() as f64).collect();
    let alpha = hill_estimator(&values, values.len() / 20).unwrap();
    println!("tail exponent estimate {alpha:.2} (configured {})", config.value_shape);

    let path = std::env::temp_dir().join("paysort-day.csv");
    save_day(&day, &path).unwrap();
    println!("wrote {}", path.display());
}

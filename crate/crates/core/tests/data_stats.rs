use paysort::data::{generate_day, hill_estimator, read_day, write_day, SyntheticDayConfig};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const MS_PER_HOUR: i64 = 3_600_000;

fn hourly_counts(config: &SyntheticDayConfig) -> Vec<u64> {
    let day = generate_day(config).unwrap();
    let hours = (config.close_hour - config.open_hour) as usize;
    let mut counts = vec![0u64; hours];
    for p in &day.payments {
        let h = (p.submitted_at.millis() / MS_PER_HOUR) as usize - config.open_hour as usize;
        counts[h] += 1;
    }
    counts
}

fn uniformity_p_value(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn flat_profile_spreads_arrivals_evenly() {
    let mut pooled = vec![0u64; 10];
    let mut rejections = 0;
    for seed in 0..20 {
        let config = SyntheticDayConfig::new(10, 3000, seed).with_flat_profile();
        let counts = hourly_counts(&config);
        for (p, c) in pooled.iter_mut().zip(&counts) {
            *p += c;
        }
        if uniformity_p_value(&counts) <= 0.01 {
            rejections += 1;
        }
    }
    let p = uniformity_p_value(&pooled);
    assert!(p > 0.01, "pooled p = {p}, counts {pooled:?}");
    // one rejection in a hundred is expected at this level
    assert!(rejections <= 2, "{rejections} of 20 days rejected");
}

#[test]
fn default_profile_is_busiest_in_the_morning() {
    let counts = hourly_counts(&SyntheticDayConfig::new(10, 20_000, 4));
    assert_eq!(counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0, 0);
    assert!(counts[0] > 3 * counts[9] / 2, "{counts:?}");
    assert!(uniformity_p_value(&counts) < 1e-6);
}

#[test]
fn daily_volume_is_close_to_target() {
    for seed in 0..5 {
        let n = generate_day(&SyntheticDayConfig::new(20, 23_000, seed)).unwrap().payments.len() as f64;
        // Poisson count: four standard deviations
        assert!((n - 23_000.0).abs() < 4.0 * 23_000f64.sqrt(), "{n}");
    }
}

#[test]
fn values_have_the_configured_pareto_tail() {
    let config = SyntheticDayConfig::new(20, 100_000, 9);
    let day = generate_day(&config).unwrap();
    let values: Vec<f64> = day.payments.iter().map(|p| p.value.cents() as f64).collect();
    assert!(values.len() > 95_000);
    assert!(values.iter().all(|&v| v >= config.value_scale.cents() as f64));
    let alpha = hill_estimator(&values, values.len() / 20).unwrap();
    assert!((alpha - 1.5).abs() <= 0.3, "Hill estimate {alpha}");

    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert!(mean > median, "mean {mean} <= median {median}");
}

#[test]
fn payers_never_pay_themselves_and_weights_are_respected() {
    let mut config = SyntheticDayConfig::new(4, 4000, 2);
    config.payer_weights = Some(vec![1.0, 0.0, 0.0, 3.0]);
    let day = generate_day(&config).unwrap();
    assert!(day.payments.iter().all(|p| p.payer != p.payee));
    let from_3 = day.payments.iter().filter(|p| p.payer.0 == 3).count() as f64;
    assert!(day.payments.iter().all(|p| p.payer.0 == 0 || p.payer.0 == 3));
    let share = from_3 / day.payments.len() as f64;
    assert!((share - 0.75).abs() < 0.03, "{share}");
}

#[test]
fn generated_days_round_trip_through_csv() {
    for seed in 0..3 {
        let day = generate_day(&SyntheticDayConfig::new(6, 500, seed)).unwrap();
        let mut buf = Vec::new();
        write_day(&day, &mut buf).unwrap();
        let back = read_day(buf.as_slice()).unwrap();
        assert_eq!(back, day);
    }
}

#[test]
fn same_seed_same_day() {
    let config = SyntheticDayConfig::new(8, 2000, 77);
    assert_eq!(generate_day(&config).unwrap(), generate_day(&config).unwrap());
    let other = SyntheticDayConfig { seed: 78, ..config };
    assert_ne!(generate_day(&other).unwrap(), generate_day(&SyntheticDayConfig::new(8, 2000, 77)).unwrap());
}

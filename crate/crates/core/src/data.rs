//! Payment days on disk and synthetic ones.
//!
//! The file format is CSV with the header
//! `timestamp,payer_id,payee_id,value_cents`. A timestamp is either seconds
//! from the start of the day (`28800.125`) or an ISO-8601 date-time or time
//! of day (`2024-03-01T08:00:00.125`, `08:00:00`); all dated rows of a file
//! must share one date. Participant ids are free-form strings, interned in
//! sorted order. Files written here always use seconds with three decimals.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Pareto};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Money, ParticipantId, Payment, Timestamp};
use crate::ledger::Ledger;

pub const CSV_HEADER: [&str; 4] = ["timestamp", "payer_id", "payee_id", "value_cents"];

const MS_PER_HOUR: i64 = 3_600_000;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("expected header `{}`, found `{found}`", CSV_HEADER.join(","))]
    Header { found: String },
    #[error("invalid synthetic day config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A day of payments and the names behind the participant ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Day {
    /// `participants[id]` is the name of `ParticipantId(id)`.
    pub participants: Vec<String>,
    /// Sorted by submission time.
    pub payments: Vec<Payment>,
}

impl Day {
    /// A zeroed start ledger covering every participant.
    pub fn start_ledger(&self) -> Ledger {
        Ledger::zeroed(self.participants.len())
    }

    pub fn total_value(&self) -> Money {
        self.payments.iter().map(|p| p.value).sum()
    }
}

fn parse_timestamp(raw: &str, day: &mut Option<NaiveDate>) -> Result<Timestamp, String> {
    let raw = raw.trim();
    if let Ok(secs) = raw.parse::<f64>() {
        if !secs.is_finite() || secs < 0.0 {
            return Err(format!("timestamp `{raw}` must be non-negative seconds"));
        }
        return Ok(Timestamp::from_seconds(secs));
    }
    let of_day = |t: NaiveTime| Timestamp(t.num_seconds_from_midnight() as i64 * 1000 + (t.nanosecond() / 1_000_000) as i64);
    if let Ok(t) = NaiveTime::parse_from_str(raw, "%H:%M:%S%.f") {
        return Ok(of_day(t));
    }
    let dated = DateTime::parse_from_rfc3339(raw)
        .map(|d| d.naive_local())
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f"))
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S%.f"))
        .map_err(|_| format!("unrecognised timestamp `{raw}`"))?;
    match day {
        Some(d) if *d != dated.date() => {
            return Err(format!("timestamp `{raw}` is not on {d}, the date of earlier rows"))
        }
        _ => *day = Some(dated.date()),
    }
    Ok(of_day(dated.time()))
}

struct RawRow {
    line: u64,
    at: Timestamp,
    payer: String,
    payee: String,
    value: i64,
}

/// Reads a day from CSV. Rows are validated, stably sorted by timestamp,
/// and numbered in file order.
pub fn read_day<R: Read>(reader: R) -> Result<Day, DataError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(DataError::Header { found: header.iter().collect::<Vec<_>>().join(",") });
    }
    let mut date = None;
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| DataError::Row { line, message };
        if record.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", record.len())));
        }
        let at = parse_timestamp(&record[0], &mut date).map_err(err)?;
        let value: i64 = record[3]
            .parse()
            .map_err(|_| err(format!("value_cents `{}` is not an integer", &record[3])))?;
        if value <= 0 {
            return Err(err(format!("value_cents must be positive, found {value}")));
        }
        if record[1].is_empty() || record[2].is_empty() {
            return Err(err("empty participant id".into()));
        }
        if record[1] == record[2] {
            return Err(err(format!("`{}` pays itself", &record[1])));
        }
        rows.push(RawRow { line, at, payer: record[1].to_string(), payee: record[2].to_string(), value });
    }

    let mut participants: Vec<String> = rows.iter().flat_map(|r| [r.payer.clone(), r.payee.clone()]).collect();
    participants.sort();
    participants.dedup();
    let id = |name: &str| ParticipantId(participants.binary_search_by(|p| p.as_str().cmp(name)).expect("interned") as u32);

    let mut payments = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        let payment = Payment::new(k as u64, id(&r.payer), id(&r.payee), Money::from_cents(r.value), r.at)
            .map_err(|e| DataError::Row { line: r.line, message: e.to_string() })?;
        payments.push(payment);
    }
    payments.sort_by_key(|p| p.submitted_at);
    Ok(Day { participants, payments })
}

pub fn load_day(path: impl AsRef<Path>) -> Result<Day, DataError> {
    read_day(File::open(path)?)
}

fn format_seconds(t: Timestamp) -> String {
    let ms = t.millis();
    format!("{}.{:03}", ms.div_euclid(1000), ms.rem_euclid(1000))
}

pub fn write_day<W: Write>(day: &Day, writer: W) -> Result<(), DataError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_HEADER)?;
    for p in &day.payments {
        csv.write_record([
            format_seconds(p.submitted_at),
            day.participants[p.payer.index()].clone(),
            day.participants[p.payee.index()].clone(),
            p.value.cents().to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn save_day(day: &Day, path: impl AsRef<Path>) -> Result<(), DataError> {
    write_day(day, File::create(path)?)
}

fn default_shape() -> f64 {
    1.5
}
fn default_scale() -> Money {
    Money::from_cents(100_000)
}
fn default_open() -> u32 {
    8
}
fn default_close() -> u32 {
    18
}
fn default_profile() -> Vec<f64> {
    // busiest in the first hour, tapering towards the close
    vec![2.2, 1.5, 1.2, 1.0, 0.9, 0.9, 1.0, 1.0, 0.8, 0.6]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SyntheticDayConfig {
    pub num_participants: usize,
    /// Expected number of payments in the day.
    pub target_volume: usize,
    /// Pareto tail exponent, `> 1`.
    #[serde(default = "default_shape")]
    pub value_shape: f64,
    /// Smallest possible value (the Pareto scale).
    #[serde(default = "default_scale")]
    pub value_scale: Money,
    /// Values above this are clamped.
    #[serde(default)]
    pub max_value: Option<Money>,
    #[serde(default = "default_open")]
    pub open_hour: u32,
    #[serde(default = "default_close")]
    pub close_hour: u32,
    /// One relative rate per hour between open and close.
    #[serde(default = "default_profile")]
    pub arrival_profile: Vec<f64>,
    /// Relative payer activity; uniform when absent.
    #[serde(default)]
    pub payer_weights: Option<Vec<f64>>,
    /// Relative payee attractiveness; uniform among the other participants
    /// when absent.
    #[serde(default)]
    pub payee_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticDayConfig {
    pub fn new(num_participants: usize, target_volume: usize, seed: u64) -> Self {
        SyntheticDayConfig {
            num_participants,
            target_volume,
            value_shape: default_shape(),
            value_scale: default_scale(),
            max_value: None,
            open_hour: default_open(),
            close_hour: default_close(),
            arrival_profile: default_profile(),
            payer_weights: None,
            payee_weights: None,
            seed,
        }
    }

    /// Same rate in every hour.
    pub fn with_flat_profile(mut self) -> Self {
        self.arrival_profile = vec![1.0; (self.close_hour - self.open_hour) as usize];
        self
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::Config(m));
        if self.num_participants < 2 {
            return bad("at least two participants are needed".into());
        }
        if !(self.value_shape > 1.0 && self.value_shape.is_finite()) {
            return bad(format!("value-shape must exceed 1, got {}", self.value_shape));
        }
        if !self.value_scale.is_positive() {
            return bad("value-scale must be positive".into());
        }
        if self.max_value.is_some_and(|m| m < self.value_scale) {
            return bad("max-value is below value-scale".into());
        }
        if self.open_hour >= self.close_hour || self.close_hour > 24 {
            return bad(format!("bad opening hours {}..{}", self.open_hour, self.close_hour));
        }
        let hours = (self.close_hour - self.open_hour) as usize;
        if self.arrival_profile.len() != hours {
            return bad(format!("arrival-profile has {} rates for {hours} hours", self.arrival_profile.len()));
        }
        check_weights("arrival-profile", &self.arrival_profile)?;
        for (name, w) in [("payer-weights", &self.payer_weights), ("payee-weights", &self.payee_weights)] {
            if let Some(w) = w {
                if w.len() != self.num_participants {
                    return bad(format!("{name} has {} entries for {} participants", w.len(), self.num_participants));
                }
                check_weights(name, w)?;
            }
        }
        if let (Some(payers), Some(payees)) = (&self.payer_weights, &self.payee_weights) {
            // every active payer needs somebody else to pay
            for (k, &w) in payers.iter().enumerate() {
                if w > 0.0 && payees.iter().enumerate().all(|(j, &v)| j == k || v == 0.0) {
                    return bad(format!("participant {k} can pay but has no possible payee"));
                }
            }
        } else if let Some(payees) = &self.payee_weights {
            if payees.iter().filter(|&&v| v > 0.0).count() < 2 {
                return bad("payee-weights need two positive entries when every participant pays".into());
            }
        }
        Ok(())
    }

    /// Participant names, zero-padded so that sorted order is id order.
    pub fn participant_names(&self) -> Vec<String> {
        let width = (self.num_participants - 1).to_string().len().max(2);
        (0..self.num_participants).map(|k| format!("P{k:0width$}")).collect()
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<(), DataError> {
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(DataError::Config(format!("{name} must be finite and non-negative")));
    }
    if !w.iter().any(|&x| x > 0.0) {
        return Err(DataError::Config(format!("{name} needs a positive entry")));
    }
    Ok(())
}

/// Draws a synthetic day: arrivals from an inhomogeneous Poisson process
/// (by thinning), Pareto values, payers by weight and payees by weight
/// among the others.
pub fn generate_day(config: &SyntheticDayConfig) -> Result<Day, DataError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let profile_sum: f64 = config.arrival_profile.iter().sum();
    // payments per millisecond in each hour
    let rates: Vec<f64> = config
        .arrival_profile
        .iter()
        .map(|m| config.target_volume as f64 * m / profile_sum / MS_PER_HOUR as f64)
        .collect();
    let peak = rates.iter().copied().fold(0.0, f64::max);
    let span = (config.close_hour - config.open_hour) as f64 * MS_PER_HOUR as f64;
    let open = config.open_hour as i64 * MS_PER_HOUR;

    let m = config.num_participants;
    let uniform = vec![1.0; m];
    let payer_dist = WeightedIndex::new(config.payer_weights.as_ref().unwrap_or(&uniform)).expect("validated");
    let payee_base = config.payee_weights.clone().unwrap_or_else(|| uniform.clone());
    let payee_dists: Vec<Option<WeightedIndex<f64>>> = (0..m)
        .map(|payer| {
            let mut w = payee_base.clone();
            w[payer] = 0.0;
            WeightedIndex::new(w).ok()
        })
        .collect();
    let values = Pareto::new(config.value_scale.cents() as f64, config.value_shape).expect("validated");

    let mut payments = Vec::new();
    if peak > 0.0 {
        let gaps = Exp::new(peak).expect("positive rate");
        let mut t = 0.0;
        loop {
            t += gaps.sample(&mut rng);
            if t >= span {
                break;
            }
            let hour = ((t / MS_PER_HOUR as f64) as usize).min(rates.len() - 1);
            if rng.gen::<f64>() * peak >= rates[hour] {
                continue;
            }
            let payer = payer_dist.sample(&mut rng);
            let payee = payee_dists[payer].as_ref().expect("validated: every payer has a payee").sample(&mut rng);
            let mut value = (values.sample(&mut rng).round() as i64).max(1);
            if let Some(cap) = config.max_value {
                value = value.min(cap.cents());
            }
            let id = payments.len() as u64;
            payments.push(
                Payment::new(
                    id,
                    ParticipantId(payer as u32),
                    ParticipantId(payee as u32),
                    Money::from_cents(value),
                    Timestamp(open + t as i64),
                )
                .expect("distinct participants, positive value"),
            );
        }
    }
    Ok(Day { participants: config.participant_names(), payments })
}

/// Hill estimate of a Pareto tail exponent from the `k` largest values.
pub fn hill_estimator(values: &[f64], k: usize) -> Option<f64> {
    if k == 0 || k >= values.len() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k].ln();
    let mean_excess = sorted[..k].iter().map(|v| v.ln() - threshold).sum::<f64>() / k as f64;
    (mean_excess > 0.0).then(|| 1.0 / mean_excess)
}

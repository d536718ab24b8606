//! Self-checks behind `paysort verify`: the library's fast paths against
//! slow, independent recomputations on small random instances, plus the
//! hand-worked fixtures shipped in `fixtures/`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::data::load_day;
use crate::domain::{Batch, Money, Ordering, ParticipantId, Payment, Timestamp};
use crate::ledger::{net_position_series, required_liquidity, settle_and_carry, Ledger, ParticipantState};
use crate::qubo::{build_qubo, decode_block, encode_ordering, Decoded, QuboParams};
use crate::solvers::{solve_exact, DEFAULT_EXHAUSTIVE_LIMIT};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, failure: Option<String>, ok_detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed: failure.is_none(),
            detail: failure.unwrap_or(ok_detail),
        }
    }
}

/// A random batch on `m` participants with a random, valid start ledger.
pub fn random_instance(rng: &mut impl Rng, n: usize, m: u32, max_cents: i64) -> (Batch, Ledger) {
    let payments = (0..n)
        .map(|k| {
            let payer = rng.gen_range(0..m);
            let mut payee = rng.gen_range(0..m - 1);
            if payee >= payer {
                payee += 1;
            }
            Payment::new(
                k as u64,
                ParticipantId(payer),
                ParticipantId(payee),
                Money::from_cents(rng.gen_range(1..=max_cents)),
                Timestamp(k as i64),
            )
            .expect("distinct participants, positive value")
        })
        .collect();
    let states = (0..m)
        .map(|a| {
            let mndp = Money::from_cents(rng.gen_range(0..=max_cents));
            // keep N + mndp >= 0
            let net = Money::from_cents(rng.gen_range(-mndp.cents()..=max_cents));
            ParticipantState { participant: ParticipantId(a), net_position: net, mndp }
        })
        .collect();
    (Batch::new(0, payments), Ledger::from_states(states).expect("valid by construction"))
}

/// Every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { return out };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Liquidity from the trajectory of net positions.
fn cost_from_trajectory(batch: &Batch, ordering: &Ordering, start: &Ledger) -> i64 {
    let series = net_position_series(batch, ordering, start).expect("valid instance");
    series
        .iter()
        .zip(start.states())
        .map(|(traj, s)| {
            let lowest = traj[1..].iter().map(|n| (*n + s.mndp).cents()).min().unwrap_or(0);
            (-lowest).max(0)
        })
        .sum()
}

fn check_ledger(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failure = None;
    for k in 0..300 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(2..=5);
        let (batch, start) = random_instance(&mut rng, n, m, 1000);
        let mut seq: Vec<usize> = (0..n).collect();
        seq.sort_by_key(|_| rng.gen::<u32>());
        let ordering = Ordering::new(seq).expect("permutation");
        let fast = required_liquidity(&batch, &ordering, &start).expect("valid").aggregate_cost.cents();
        let slow = cost_from_trajectory(&batch, &ordering, &start);
        if fast != slow {
            failure = Some(format!("instance {k}: ledger {fast} vs trajectory {slow}"));
            break;
        }
    }
    CheckOutcome::new("ledger-oracle", failure, "300 random orderings agree with their trajectories".into())
}

fn check_exact(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failure = None;
    for k in 0..60 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(2..=4);
        let (batch, start) = random_instance(&mut rng, n, m, 500);
        let exact = solve_exact(&batch, &start, DEFAULT_EXHAUSTIVE_LIMIT).expect("small").aggregate_cost.cents();
        let brute = permutations(n)
            .into_iter()
            .map(|p| cost_from_trajectory(&batch, &Ordering::new(p).expect("permutation"), &start))
            .min()
            .expect("n >= 1");
        let fifo = cost_from_trajectory(&batch, &Ordering::identity(n), &start);
        if exact != brute || fifo < exact {
            failure = Some(format!("instance {k}: exact {exact}, enumeration {brute}, fifo {fifo}"));
            break;
        }
    }
    CheckOutcome::new("exact-vs-enumeration", failure, "60 instances, n <= 6".into())
}

fn check_qubo(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failure = None;
    'outer: for k in 0..20 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(2..=4);
        let (batch, start) = random_instance(&mut rng, n, m, 300);
        let model = match build_qubo(&batch, &start, &QuboParams::for_batch(&batch, Money::from_cents(1))) {
            Ok(m) => m,
            Err(e) => {
                failure = Some(format!("instance {k}: {e}"));
                break;
            }
        };
        for p in permutations(n) {
            let ordering = Ordering::new(p).expect("permutation");
            let bits = encode_ordering(&ordering, &batch, &start, &model).expect("encodable");
            let energy = model.energy(&bits).expect("sized");
            let cost = cost_from_trajectory(&batch, &ordering, &start);
            if energy != cost as f64 {
                failure = Some(format!("instance {k}, order {:?}: energy {energy} vs cost {cost}", ordering.one_based()));
                break 'outer;
            }
        }
    }
    CheckOutcome::new("qubo-energy-equals-cost", failure, "20 instances, every ordering, one-cent unit".into())
}

fn check_decode() -> CheckOutcome {
    // payment i (row) settles at the marked position (column)
    let rows: [[u8; 7]; 7] = [
        [0, 1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 0, 1, 0],
        [1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1],
        [0, 0, 1, 0, 0, 0, 0],
    ];
    let mut bits: Vec<u8> = rows.iter().flatten().copied().collect();
    let mut failure = None;
    match decode_block(&bits, 7) {
        Ok(Decoded::Feasible(o)) if o.one_based() == vec![4, 1, 7, 5, 2, 3, 6] => {}
        other => failure = Some(format!("matrix decoded to {other:?}")),
    }
    // settle payment 1 a second time, at position 4
    bits[3] = 1;
    if !matches!(decode_block(&bits, 7), Ok(Decoded::Infeasible(_))) {
        failure.get_or_insert_with(|| "duplicated settlement was not flagged".into());
    }
    CheckOutcome::new("decode-permutation-matrix", failure, "7x7 fixture and a duplicate".into())
}

fn check_concatenation(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failure = None;
    for k in 0..100 {
        let n = rng.gen_range(2..=10);
        let (batch, start) = random_instance(&mut rng, n, 4, 1000);
        let cut = rng.gen_range(1..batch.len());
        let first = Batch::new(0, batch.payments[..cut].to_vec());
        let second = Batch::new(1, batch.payments[cut..].to_vec());
        let mid = settle_and_carry(&first, &Ordering::identity(first.len()), &start).expect("valid");
        let split = settle_and_carry(&second, &Ordering::identity(second.len()), &mid).expect("valid");
        let whole = settle_and_carry(&batch, &Ordering::identity(batch.len()), &start).expect("valid");
        if split != whole {
            failure = Some(format!("instance {k}: split at {cut} differs from the single pass"));
            break;
        }
    }
    CheckOutcome::new("batch-concatenation", failure, "100 random splits".into())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct FixtureCase {
    file: String,
    fifo_cost: i64,
    optimal_cost: i64,
    #[serde(default)]
    optimal_order: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
struct FixtureFile {
    case: Vec<FixtureCase>,
}

fn check_fixtures(dir: &Path) -> Vec<CheckOutcome> {
    let manifest = dir.join("expected.toml");
    let parsed: Result<FixtureFile, String> = std::fs::read_to_string(&manifest)
        .map_err(|e| format!("{}: {e}", manifest.display()))
        .and_then(|t| toml::from_str(&t).map_err(|e| format!("{}: {e}", manifest.display())));
    let cases = match parsed {
        Ok(f) => f.case,
        Err(e) => return vec![CheckOutcome::new("fixtures", Some(e), String::new())],
    };
    cases
        .iter()
        .map(|case| {
            let name = format!("fixture {}", case.file);
            let run = || -> Result<String, String> {
                let day = load_day(dir.join(&case.file)).map_err(|e| e.to_string())?;
                let batch = Batch::new(0, day.payments.clone());
                let start = day.start_ledger();
                let fifo = required_liquidity(&batch, &Ordering::identity(batch.len()), &start)
                    .map_err(|e| e.to_string())?;
                let best = solve_exact(&batch, &start, DEFAULT_EXHAUSTIVE_LIMIT).map_err(|e| e.to_string())?;
                if fifo.aggregate_cost.cents() != case.fifo_cost {
                    return Err(format!("FIFO cost {} expected {}", fifo.aggregate_cost.cents(), case.fifo_cost));
                }
                if best.aggregate_cost.cents() != case.optimal_cost {
                    return Err(format!("optimum {} expected {}", best.aggregate_cost.cents(), case.optimal_cost));
                }
                if let Some(order) = &case.optimal_order {
                    if &best.ordering.one_based() != order {
                        return Err(format!("optimal order {:?} expected {order:?}", best.ordering.one_based()));
                    }
                }
                Ok(format!("FIFO {} -> optimal {}", fifo.aggregate_cost, best.aggregate_cost))
            };
            match run() {
                Ok(detail) => CheckOutcome::new(&name, None, detail),
                Err(e) => CheckOutcome::new(&name, Some(e), String::new()),
            }
        })
        .collect()
}

/// Runs every self-check; fixture checks only when `fixtures` is given.
pub fn run_checks(seed: u64, fixtures: Option<&Path>) -> Vec<CheckOutcome> {
    let mut out = vec![
        check_ledger(seed),
        check_exact(seed.wrapping_add(1)),
        check_qubo(seed.wrapping_add(2)),
        check_decode(),
        check_concatenation(seed.wrapping_add(3)),
    ];
    if let Some(dir) = fixtures {
        out.extend(check_fixtures(dir));
    }
    out
}

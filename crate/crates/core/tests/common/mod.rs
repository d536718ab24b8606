//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's cost or energy code; it works on plain integers.
#![allow(dead_code)]

use paysort::qubo::{QuboModel, VarTag};
use paysort::{Batch, Ledger, Money, ParticipantId, ParticipantState, Payment, Timestamp};
use rand::Rng;
use rand_distr::{Distribution, Pareto};

/// `(payer, payee, cents)`.
pub type Leg = (usize, usize, i64);
/// `(net position, mndp)` per participant.
pub type Start = Vec<(i64, i64)>;

/// Per-participant liquidity for settling `legs` in `order`, by walking the
/// balances one payment at a time and recording the deepest shortfall.
pub fn oracle_liquidity(legs: &[Leg], order: &[usize], start: &Start) -> Vec<i64> {
    let mut balance: Vec<i64> = start.iter().map(|(n, m)| n + m).collect();
    let mut deepest = vec![0i64; start.len()];
    for &i in order {
        let (from, to, v) = legs[i];
        balance[from] -= v;
        balance[to] += v;
        for a in 0..balance.len() {
            if -balance[a] > deepest[a] {
                deepest[a] = -balance[a];
            }
        }
    }
    deepest
}

pub fn oracle_cost(legs: &[Leg], order: &[usize], start: &Start) -> i64 {
    oracle_liquidity(legs, order, start).iter().sum()
}

/// Heap's algorithm; calls `f` on every permutation of `0..n`.
pub fn for_each_permutation(n: usize, f: &mut dyn FnMut(&[usize])) {
    fn heap(k: usize, a: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k <= 1 {
            f(a);
            return;
        }
        for i in 0..k {
            heap(k - 1, a, f);
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    heap(n, &mut a, f);
}

pub fn oracle_min(legs: &[Leg], start: &Start) -> i64 {
    let mut best = i64::MAX;
    for_each_permutation(legs.len(), &mut |p| best = best.min(oracle_cost(legs, p, start)));
    best
}

pub fn random_legs(rng: &mut impl Rng, n: usize, m: usize, max_cents: i64) -> Vec<Leg> {
    (0..n)
        .map(|_| {
            let from = rng.gen_range(0..m);
            let mut to = rng.gen_range(0..m - 1);
            if to >= from {
                to += 1;
            }
            (from, to, rng.gen_range(1..=max_cents))
        })
        .collect()
}

pub fn random_start(rng: &mut impl Rng, m: usize, max_cents: i64) -> Start {
    (0..m)
        .map(|_| {
            let mndp = rng.gen_range(0..=max_cents);
            (rng.gen_range(-mndp..=max_cents), mndp)
        })
        .collect()
}

pub fn batch_of(legs: &[Leg]) -> Batch {
    Batch::new(
        0,
        legs.iter()
            .enumerate()
            .map(|(k, &(from, to, v))| {
                Payment::new(
                    k as u64,
                    ParticipantId(from as u32),
                    ParticipantId(to as u32),
                    Money::from_cents(v),
                    Timestamp(k as i64),
                )
                .unwrap()
            })
            .collect(),
    )
}

pub fn ledger_of(start: &Start) -> Ledger {
    Ledger::from_states(
        start
            .iter()
            .enumerate()
            .map(|(a, &(n, m))| ParticipantState {
                participant: ParticipantId(a as u32),
                net_position: Money::from_cents(n),
                mndp: Money::from_cents(m),
            })
            .collect(),
    )
    .unwrap()
}

/// A batch of `n` payments among 2..=5 participants with Pareto values
/// (scale one dollar, tail exponent 1.5) and a zeroed start.
pub fn pareto_case(rng: &mut impl Rng, n: usize) -> (Vec<Leg>, Start) {
    let m = rng.gen_range(2..=5usize);
    let pareto = Pareto::new(100.0, 1.5).unwrap();
    let legs = (0..n)
        .map(|_| {
            let from = rng.gen_range(0..m);
            let mut to = rng.gen_range(0..m - 1);
            if to >= from {
                to += 1;
            }
            let v: f64 = pareto.sample(rng);
            (from, to, (v.round() as i64).min(1_000_000))
        })
        .collect();
    (legs, vec![(0, 0); m])
}

/// `H` evaluated term by term from its definition: liquidity objective,
/// squared balance equalities and squared one-hot equalities. Uses only the
/// model's variable layout and penalty weights.
pub fn naive_energy(model: &QuboModel, legs: &[Leg], bits: &[u8]) -> f64 {
    let n = model.num_payments();
    let params = model.params();
    let x = |i: usize, t: usize| bits[i * n + t] as i64;
    let read = |first: usize, len: u32, unit: i64| -> i64 {
        (0..len as usize).map(|j| (bits[first + j] as i64) << j).sum::<i64>() * unit
    };
    let mut energy = 0.0;
    for p in model.priced() {
        let a = p.participant.index();
        let b = read(p.liquidity.first_var, p.liquidity.bits, p.liquidity.unit.cents());
        energy += b as f64;
        for (t, reg) in p.slack.iter().enumerate() {
            let s = read(reg.first_var, reg.bits, reg.unit.cents());
            let mut balance = p.available.cents() + b;
            for tau in 0..=t {
                for (i, &(from, to, v)) in legs.iter().enumerate() {
                    let f = if from == a { -v } else if to == a { v } else { 0 };
                    balance += f * x(i, tau);
                }
            }
            energy += params.lambda_balance * ((balance - s) as f64).powi(2);
        }
    }
    for i in 0..n {
        let row: i64 = (0..n).map(|t| x(i, t)).sum();
        energy += params.lambda_one_hot * ((1 - row) as f64).powi(2);
    }
    for t in 0..n {
        let col: i64 = (0..n).map(|i| x(i, t)).sum();
        energy += params.lambda_one_hot * ((1 - col) as f64).powi(2);
    }
    energy
}

/// Number of assignment variables plus register bits, checked against the
/// registry so the oracle cannot silently skip variables.
pub fn registry_is_covered(model: &QuboModel) -> bool {
    let n = model.num_payments();
    let mut seen = vec![false; model.num_vars()];
    for v in 0..n * n {
        seen[v] = true;
    }
    for p in model.priced() {
        for r in std::iter::once(&p.liquidity).chain(&p.slack) {
            for j in 0..r.bits as usize {
                seen[r.first_var + j] = true;
            }
        }
    }
    seen.iter().all(|&s| s)
        && model.registry().iter().enumerate().all(|(v, tag)| match tag {
            VarTag::Assignment { payment, position } => v == payment * n + position,
            _ => v >= n * n,
        })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut j = k;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[k]] {
                j += 1;
            }
            let avg = (k + j) as f64 / 2.0 + 1.0;
            for &i in &idx[k..=j] {
                r[i] = avg;
            }
            k = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b, sxy * sxy / (sxx * syy))
}

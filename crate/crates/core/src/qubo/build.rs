use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{bit_width, PricedParticipant, QuboError, QuboModel, Register, VarTag};
use crate::domain::{Batch, Money};
use crate::ledger::Ledger;

/// Penalty weights and discretization for [`build_qubo`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuboParams {
    /// Weight of the squared balance equalities.
    pub lambda_balance: f64,
    /// Weight of the squared one-hot equalities.
    pub lambda_one_hot: f64,
    /// Resolution of the liquidity registers.
    pub base_unit: Money,
    /// Uniform upper bound for every slack register. `None` sizes each
    /// register to the largest slack its constraint can reach.
    pub slack_bound: Option<Money>,
}

impl QuboParams {
    /// `lambda_balance = 1 / base_unit^2`, `lambda_one_hot = 2 * total value`.
    pub fn for_batch(batch: &Batch, base_unit: Money) -> Self {
        let unit = base_unit.cents().max(1) as f64;
        QuboParams {
            lambda_balance: 1.0 / (unit * unit),
            lambda_one_hot: 2.0 * batch.total_value().cents().max(1) as f64,
            base_unit,
            slack_bound: None,
        }
    }

    pub fn validate(&self) -> Result<(), QuboError> {
        if !(self.lambda_balance > 0.0 && self.lambda_one_hot > 0.0)
            || !self.lambda_balance.is_finite()
            || !self.lambda_one_hot.is_finite()
        {
            return Err(QuboError::BadPenalty {
                balance: self.lambda_balance.to_string(),
                one_hot: self.lambda_one_hot.to_string(),
            });
        }
        if self.base_unit.cents() < 1 {
            return Err(QuboError::BadBaseUnit(self.base_unit));
        }
        Ok(())
    }
}

/// Counts of bias contributions before like terms are merged.
///
/// Each squared balance penalty `(c + sum_k a_k y_k)^2` contributes one
/// linear term per variable it mentions and one quadratic term per pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasCensus {
    pub num_vars: u64,
    pub balance_penalties: u64,
    pub balance_linear_terms: u64,
    pub balance_quadratic_terms: u64,
    pub one_hot_linear_terms: u64,
    pub one_hot_quadratic_terms: u64,
}

struct Plan {
    n: usize,
    registry: Vec<VarTag>,
    priced: Vec<PricedParticipant>,
    /// Per priced participant: `(payment, flow in cents)` for payments it is in.
    flows: Vec<Vec<(usize, i64)>>,
}

/// Largest slack the balance constraint at each position can need.
fn slack_needs(reserve: i64, available: i64, incoming: &mut [i64], n: usize) -> Vec<i64> {
    incoming.sort_unstable_by(|a, b| b.cmp(a));
    let mut top = 0i64;
    (0..n)
        .map(|t| {
            if let Some(v) = incoming.get(t) {
                top += v;
            }
            reserve + available + top
        })
        .collect()
}

fn plan(batch: &Batch, start: &Ledger, params: &QuboParams) -> Result<Plan, QuboError> {
    params.validate()?;
    start.check_batch(batch)?;
    let n = batch.len();
    let unit = params.base_unit;

    let mut registry: Vec<VarTag> = (0..n * n)
        .map(|v| VarTag::Assignment { payment: v / n, position: v % n })
        .collect();
    let mut priced = Vec::new();
    let mut flows = Vec::new();

    for participant in batch.payers() {
        let available = start.get(participant).expect("checked").available();
        let outgoing: Money =
            batch.payments.iter().filter(|p| p.payer == participant).map(|p| p.value).sum();
        let need = outgoing - available;
        if need <= Money::ZERO {
            // available liquidity covers every debit in any order
            continue;
        }
        let reserve = need.ceil_to(unit);
        let liquidity = Register {
            first_var: registry.len(),
            bits: bit_width(reserve.cents() / unit.cents()),
            unit,
        };
        registry.extend((0..liquidity.bits).map(|bit| VarTag::LiquidityBit { participant, bit }));

        let mut incoming: Vec<i64> = batch
            .payments
            .iter()
            .filter(|p| p.payee == participant)
            .map(|p| p.value.cents())
            .collect();
        let needs = slack_needs(reserve.cents(), available.cents(), &mut incoming, n);
        let mut slack = Vec::with_capacity(n);
        for (position, &needed) in needs.iter().enumerate() {
            let max = match params.slack_bound {
                Some(bound) if bound.cents() < needed => {
                    return Err(QuboError::SlackBoundTooSmall {
                        participant,
                        position,
                        needed: Money::from_cents(needed),
                        bound,
                    })
                }
                Some(bound) => bound.cents(),
                None => needed,
            };
            let reg = Register { first_var: registry.len(), bits: bit_width(max), unit: Money::from_cents(1) };
            registry.extend((0..reg.bits).map(|bit| VarTag::SlackBit { participant, position, bit }));
            slack.push(reg);
        }
        flows.push(
            batch
                .payments
                .iter()
                .enumerate()
                .filter_map(|(i, p)| {
                    let f = p.flow(participant).cents();
                    (f != 0).then_some((i, f))
                })
                .collect(),
        );
        priced.push(PricedParticipant { participant, available, liquidity, slack });
    }
    Ok(Plan { n, registry, priced, flows })
}

/// Term counts of the model [`build_qubo`] would produce, without building it.
pub fn bias_census(batch: &Batch, start: &Ledger, params: &QuboParams) -> Result<BiasCensus, QuboError> {
    let plan = plan(batch, start, params)?;
    let n = plan.n as u64;
    let mut census = BiasCensus {
        num_vars: plan.registry.len() as u64,
        one_hot_linear_terms: 2 * n * n,
        one_hot_quadratic_terms: 2 * n * (n * n.saturating_sub(1) / 2),
        ..Default::default()
    };
    for (p, flows) in plan.priced.iter().zip(&plan.flows) {
        let degree = flows.len() as u64;
        for (t, slack) in p.slack.iter().enumerate() {
            let terms = degree * (t as u64 + 1) + p.liquidity.bits as u64 + slack.bits as u64;
            census.balance_penalties += 1;
            census.balance_linear_terms += terms;
            census.balance_quadratic_terms += terms * terms.saturating_sub(1) / 2;
        }
    }
    Ok(census)
}

struct Accumulator {
    linear: Vec<f64>,
    quadratic: HashMap<u64, f64>,
    offset: f64,
}

impl Accumulator {
    fn quad(&mut self, a: usize, b: usize, c: f64) {
        debug_assert_ne!(a, b);
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        *self.quadratic.entry(((i as u64) << 32) | j as u64).or_insert(0.0) += c;
    }
}

/// Builds the penalty QUBO for settling `batch` from `start`.
///
/// Only participants whose outgoing value can exceed their available
/// liquidity get a liquidity register and balance penalties; for everyone
/// else `b = 0` and every balance constraint holds in any order.
pub fn build_qubo(batch: &Batch, start: &Ledger, params: &QuboParams) -> Result<QuboModel, QuboError> {
    let Plan { n, registry, priced, flows } = plan(batch, start, params)?;
    let l1 = params.lambda_balance;
    let l2 = params.lambda_one_hot;
    let mut acc = Accumulator { linear: vec![0.0; registry.len()], quadratic: HashMap::new(), offset: 0.0 };
    let mut census = BiasCensus { num_vars: registry.len() as u64, ..Default::default() };

    // sum_a b_a
    for p in &priced {
        for (j, v) in p.liquidity.vars().enumerate() {
            acc.linear[v] += (p.liquidity.unit.cents() << j) as f64;
        }
    }

    // Balance penalties. Terms shared by every position t >= tau are merged
    // here with multiplicity; slack terms are specific to one t.
    for (p, flows) in priced.iter().zip(&flows) {
        let c = p.available.cents() as f64;
        let nf = n as f64;
        // (var, position, coefficient) for each x[i][tau] touching this participant
        let xs: Vec<(usize, usize, f64)> = flows
            .iter()
            .flat_map(|&(i, f)| (0..n).map(move |tau| (i * n + tau, tau, f as f64)))
            .collect();
        let bs: Vec<(usize, f64)> =
            p.liquidity.vars().enumerate().map(|(j, v)| (v, (p.liquidity.unit.cents() << j) as f64)).collect();

        acc.offset += l1 * nf * c * c;
        for (k, &(v, w)) in bs.iter().enumerate() {
            acc.linear[v] += l1 * nf * (w * w + 2.0 * c * w);
            for &(u, w2) in &bs[k + 1..] {
                acc.quad(v, u, 2.0 * l1 * nf * w * w2);
            }
        }
        for (k, &(v, tau, f)) in xs.iter().enumerate() {
            let m = (n - tau) as f64;
            acc.linear[v] += l1 * m * (f * f + 2.0 * c * f);
            for &(u, tau2, f2) in &xs[k + 1..] {
                acc.quad(v, u, 2.0 * l1 * f * f2 * (n - tau.max(tau2)) as f64);
            }
            for &(u, w) in &bs {
                acc.quad(v, u, 2.0 * l1 * f * w * m);
            }
        }

        for (t, slack) in p.slack.iter().enumerate() {
            let mut seen_x = 0u64;
            let ss: Vec<(usize, f64)> = slack.vars().enumerate().map(|(k, v)| (v, -((1i64 << k) as f64))).collect();
            for (k, &(v, a)) in ss.iter().enumerate() {
                acc.linear[v] += l1 * (a * a + 2.0 * c * a);
                for &(u, a2) in &ss[k + 1..] {
                    acc.quad(v, u, 2.0 * l1 * a * a2);
                }
                for &(u, w) in &bs {
                    acc.quad(v, u, 2.0 * l1 * a * w);
                }
            }
            for &(u, tau, f) in &xs {
                if tau <= t {
                    seen_x += 1;
                    for &(v, a) in &ss {
                        acc.quad(v, u, 2.0 * l1 * a * f);
                    }
                }
            }
            let terms = seen_x + bs.len() as u64 + ss.len() as u64;
            census.balance_penalties += 1;
            census.balance_linear_terms += terms;
            census.balance_quadratic_terms += terms * terms.saturating_sub(1) / 2;
        }
    }

    // One-hot rows (each payment once) and columns (each position once).
    for line in 0..n {
        for axis in 0..2 {
            let var = |k: usize| if axis == 0 { line * n + k } else { k * n + line };
            acc.offset += l2;
            for k in 0..n {
                acc.linear[var(k)] -= l2;
                census.one_hot_linear_terms += 1;
                for k2 in k + 1..n {
                    acc.quad(var(k), var(k2), 2.0 * l2);
                    census.one_hot_quadratic_terms += 1;
                }
            }
        }
    }

    let mut quadratic: Vec<(u32, u32, f64)> = acc
        .quadratic
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(key, c)| ((key >> 32) as u32, key as u32, c))
        .collect();
    quadratic.sort_unstable_by_key(|&(i, j, _)| (i, j));

    Ok(QuboModel {
        num_payments: n,
        linear: acc.linear,
        quadratic,
        offset: acc.offset,
        registry,
        priced,
        params: *params,
        census,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ParticipantId, Payment, Timestamp};

    fn pay(id: u64, from: u32, to: u32, cents: i64) -> Payment {
        Payment::new(id, ParticipantId(from), ParticipantId(to), Money::from_cents(cents), Timestamp(0))
            .unwrap()
    }

    fn batch() -> Batch {
        Batch::new(0, vec![pay(1, 0, 1, 10), pay(2, 2, 0, 10), pay(3, 1, 2, 4)])
    }

    #[test]
    fn registry_layout() {
        let b = batch();
        let m = build_qubo(&b, &Ledger::zeroed(3), &QuboParams::for_batch(&b, Money::from_cents(1))).unwrap();
        assert_eq!(m.num_payments(), 3);
        assert_eq!(m.registry()[4], VarTag::Assignment { payment: 1, position: 1 });
        assert_eq!(m.priced().len(), 3);
        // participant 0 can need up to 10 cents: 4 bits
        assert_eq!(m.priced()[0].liquidity.bits, 4);
        assert!(m.quadratic().windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        assert!(m.quadratic().iter().all(|&(i, j, _)| i < j));
    }

    #[test]
    fn census_matches_builder() {
        let b = batch();
        let params = QuboParams::for_batch(&b, Money::from_cents(1));
        let m = build_qubo(&b, &Ledger::zeroed(3), &params).unwrap();
        assert_eq!(*m.census(), bias_census(&b, &Ledger::zeroed(3), &params).unwrap());
    }

    #[test]
    fn covered_payers_are_unpriced() {
        let b = batch();
        let states = (0..3)
            .map(|i| crate::ledger::ParticipantState {
                participant: ParticipantId(i),
                net_position: Money::ZERO,
                mndp: Money::from_cents(100),
            })
            .collect();
        let start = Ledger::from_states(states).unwrap();
        let m = build_qubo(&b, &start, &QuboParams::for_batch(&b, Money::from_cents(1))).unwrap();
        assert!(m.priced().is_empty());
        assert_eq!(m.num_vars(), 9);
    }

    #[test]
    fn slack_bound_rejection_names_constraint() {
        let b = batch();
        let mut params = QuboParams::for_batch(&b, Money::from_cents(1));
        params.slack_bound = Some(Money::from_cents(12));
        let err = build_qubo(&b, &Ledger::zeroed(3), &params).unwrap_err();
        // participant 0: reserve 10, incoming 10 -> needs 20 from position 0
        assert_eq!(
            err,
            QuboError::SlackBoundTooSmall {
                participant: ParticipantId(0),
                position: 0,
                needed: Money::from_cents(20),
                bound: Money::from_cents(12),
            }
        );
        params.slack_bound = Some(Money::from_cents(64));
        let m = build_qubo(&b, &Ledger::zeroed(3), &params).unwrap();
        assert!(m.priced().iter().all(|p| p.slack.iter().all(|r| r.bits == 7)));
    }

    #[test]
    fn rejects_bad_params() {
        let b = batch();
        let mut params = QuboParams::for_batch(&b, Money::from_cents(1));
        params.lambda_one_hot = 0.0;
        assert!(matches!(build_qubo(&b, &Ledger::zeroed(3), &params), Err(QuboError::BadPenalty { .. })));
        let params = QuboParams::for_batch(&b, Money::ZERO);
        assert!(matches!(build_qubo(&b, &Ledger::zeroed(3), &params), Err(QuboError::BadBaseUnit(_))));
        let empty = build_qubo(&Batch::new(0, vec![]), &Ledger::zeroed(3), &QuboParams::for_batch(&b, Money::from_cents(1)))
            .unwrap();
        assert_eq!(empty.num_vars(), 0);
    }
}

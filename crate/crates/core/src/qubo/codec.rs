use serde::{Deserialize, Serialize};

use super::{BinaryAssignment, QuboError, QuboModel};
use crate::domain::{Batch, Money, Ordering};
use crate::ledger::{required_liquidity, Ledger, LedgerError};

/// Rows (payments) and columns (positions) of the assignment block whose
/// count of set bits is not exactly one, with that count.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Infeasibility {
    pub rows: Vec<(usize, usize)>,
    pub columns: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decoded {
    Feasible(Ordering),
    Infeasible(Infeasibility),
}

impl Decoded {
    pub fn ordering(self) -> Option<Ordering> {
        match self {
            Decoded::Feasible(o) => Some(o),
            Decoded::Infeasible(_) => None,
        }
    }
}

/// Reads the permutation out of the `x[i][t]` block.
pub fn decode_assignment(assignment: &BinaryAssignment, model: &QuboModel) -> Result<Decoded, QuboError> {
    if assignment.len() != model.num_vars() {
        return Err(QuboError::LengthMismatch { expected: model.num_vars(), got: assignment.len() });
    }
    decode_block(&assignment.values[..model.num_payments().pow(2)], model.num_payments())
}

/// Decodes a row-major `n x n` 0/1 block (row = payment, column = position).
pub fn decode_block(bits: &[u8], n: usize) -> Result<Decoded, QuboError> {
    if bits.len() != n * n {
        return Err(QuboError::LengthMismatch { expected: n * n, got: bits.len() });
    }
    let mut row_count = vec![0usize; n];
    let mut col_count = vec![0usize; n];
    let mut sequence = vec![usize::MAX; n];
    for i in 0..n {
        for t in 0..n {
            if bits[i * n + t] != 0 {
                row_count[i] += 1;
                col_count[t] += 1;
                sequence[t] = i;
            }
        }
    }
    let bad = |counts: &[usize]| -> Vec<(usize, usize)> {
        counts.iter().copied().enumerate().filter(|&(_, c)| c != 1).collect()
    };
    let report = Infeasibility { rows: bad(&row_count), columns: bad(&col_count) };
    Ok(if report.rows.is_empty() && report.columns.is_empty() {
        Decoded::Feasible(Ordering::new(sequence).expect("one-hot block is a permutation"))
    } else {
        Decoded::Infeasible(report)
    })
}

/// Sets `x` from `ordering`, each liquidity register to the exact required
/// liquidity rounded up to the base unit, and each slack to the value that
/// makes its balance equality hold.
pub fn encode_ordering(
    ordering: &Ordering,
    batch: &Batch,
    start: &Ledger,
    model: &QuboModel,
) -> Result<BinaryAssignment, QuboError> {
    let n = model.num_payments();
    if batch.len() != n {
        return Err(LedgerError::Ordering(crate::domain::OrderingError::WrongLength {
            expected: n,
            got: batch.len(),
        })
        .into());
    }
    let result = required_liquidity(batch, ordering, start)?;
    let mut bits = vec![0u8; model.num_vars()];
    for (t, &i) in ordering.as_slice().iter().enumerate() {
        bits[i * n + t] = 1;
    }

    for (id, b) in result.required_liquidity.iter().enumerate() {
        let priced = model.priced().iter().find(|p| p.participant.index() == id);
        if priced.is_none() && *b > Money::ZERO {
            return Err(QuboError::Unrepresentable { participant: crate::domain::ParticipantId(id as u32), value: *b });
        }
    }

    for p in model.priced() {
        let reserve = result.liquidity_of(p.participant).ceil_to(p.liquidity.unit);
        if !p.liquidity.write(&mut bits, reserve) {
            return Err(QuboError::Unrepresentable { participant: p.participant, value: reserve });
        }
        let mut balance = reserve + p.available;
        for (t, &i) in ordering.as_slice().iter().enumerate() {
            balance += batch.payments[i].flow(p.participant);
            if !p.slack[t].write(&mut bits, balance) {
                return Err(QuboError::Unrepresentable { participant: p.participant, value: balance });
            }
        }
    }
    Ok(BinaryAssignment { values: bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ParticipantId, Payment, Timestamp};
    use crate::qubo::{build_qubo, QuboParams};

    fn block(rows: &[[u8; 7]; 7]) -> Vec<u8> {
        rows.iter().flatten().copied().collect()
    }

    #[test]
    fn seven_by_seven_fixture() {
        let m = [
            [0, 1, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 1, 0, 0],
            [0, 0, 0, 0, 0, 1, 0],
            [1, 0, 0, 0, 0, 0, 0],
            [0, 0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 1],
            [0, 0, 1, 0, 0, 0, 0],
        ];
        let ordering = decode_block(&block(&m), 7).unwrap().ordering().unwrap();
        assert_eq!(ordering.one_based(), vec![4, 1, 7, 5, 2, 3, 6]);
    }

    #[test]
    fn identity_block_is_fifo() {
        let n = 4;
        let bits: Vec<u8> = (0..n * n).map(|v| u8::from(v / n == v % n)).collect();
        assert!(decode_block(&bits, n).unwrap().ordering().unwrap().is_identity());
    }

    #[test]
    fn duplicated_row_is_reported() {
        let n = 3;
        let mut bits: Vec<u8> = (0..n * n).map(|v| u8::from(v / n == v % n)).collect();
        bits[1] = 1; // row 0 now has two ones, column 1 too
        match decode_block(&bits, n).unwrap() {
            Decoded::Infeasible(r) => {
                assert_eq!(r.rows, vec![(0, 2)]);
                assert_eq!(r.columns, vec![(1, 2)]);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn identity_encoding_sets_identity_pattern() {
        let pay = |id, a, b, v| {
            Payment::new(id, ParticipantId(a), ParticipantId(b), Money::from_cents(v), Timestamp(0)).unwrap()
        };
        let batch = Batch::new(0, vec![pay(1, 0, 1, 30), pay(2, 1, 2, 20), pay(3, 2, 0, 10)]);
        let start = Ledger::zeroed(3);
        let model = build_qubo(&batch, &start, &QuboParams::for_batch(&batch, Money::from_cents(1))).unwrap();
        let a = encode_ordering(&Ordering::identity(3), &batch, &start, &model).unwrap();
        let x: Vec<u8> = a.values[..9].to_vec();
        assert_eq!(x, vec![1, 0, 0, 0, 1, 0, 0, 0, 1]);
        assert_eq!(decode_assignment(&a, &model).unwrap(), Decoded::Feasible(Ordering::identity(3)));
    }
}

//! Plain-text QUBO export for external samplers.
//!
//! ```text
//! qubo <num_vars> <offset>
//! <i> <c>          one line per non-zero linear coefficient
//! <i> <j> <c>      one line per quadratic coefficient, i < j
//! ```
//!
//! Coefficients use the shortest decimal form that round-trips an `f64`.

use std::io::{self, BufRead, Write};

use super::QuboModel;

/// Parsed contents of a dump file.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboDump {
    pub num_vars: usize,
    pub offset: f64,
    pub linear: Vec<(usize, f64)>,
    pub quadratic: Vec<(usize, usize, f64)>,
}

pub fn write_dump<W: Write>(model: &QuboModel, mut out: W) -> io::Result<()> {
    writeln!(out, "qubo {} {}", model.num_vars(), model.offset())?;
    for (i, c) in model.linear() {
        writeln!(out, "{i} {c}")?;
    }
    for &(i, j, c) in model.quadratic() {
        writeln!(out, "{i} {j} {c}")?;
    }
    Ok(())
}

fn bad(line: usize, msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
}

pub fn read_dump<R: BufRead>(input: R) -> io::Result<QuboDump> {
    let mut lines = input.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(bad(1, "missing header")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (num_vars, offset) = match fields.as_slice() {
        ["qubo", n, off] => (
            n.parse().map_err(|_| bad(1, "bad variable count"))?,
            off.parse().map_err(|_| bad(1, "bad offset"))?,
        ),
        _ => return Err(bad(1, "expected `qubo <num_vars> <offset>`")),
    };
    let mut dump = QuboDump { num_vars, offset, linear: Vec::new(), quadratic: Vec::new() };
    for (k, line) in lines {
        let line = line?;
        let lineno = k + 1;
        let f: Vec<&str> = line.split_whitespace().collect();
        let var = |s: &str| -> io::Result<usize> {
            let v: usize = s.parse().map_err(|_| bad(lineno, "bad variable index"))?;
            if v >= num_vars {
                return Err(bad(lineno, "variable index out of range"));
            }
            Ok(v)
        };
        let coef = |s: &str| -> io::Result<f64> { s.parse().map_err(|_| bad(lineno, "bad coefficient")) };
        match f.as_slice() {
            [] => {}
            [i, c] => dump.linear.push((var(i)?, coef(c)?)),
            [i, j, c] => dump.quadratic.push((var(i)?, var(j)?, coef(c)?)),
            _ => return Err(bad(lineno, "expected 2 or 3 fields")),
        }
    }
    Ok(dump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Batch, Money, ParticipantId, Payment, Timestamp};
    use crate::ledger::Ledger;
    use crate::qubo::{build_qubo, QuboParams};

    #[test]
    fn dump_round_trips() {
        let p = |id, a, b, v| {
            Payment::new(id, ParticipantId(a), ParticipantId(b), Money::from_cents(v), Timestamp(0)).unwrap()
        };
        let batch = Batch::new(0, vec![p(1, 0, 1, 7), p(2, 1, 0, 3)]);
        let model = build_qubo(&batch, &Ledger::zeroed(2), &QuboParams::for_batch(&batch, Money::from_cents(1)))
            .unwrap();
        let mut buf = Vec::new();
        write_dump(&model, &mut buf).unwrap();
        let dump = read_dump(buf.as_slice()).unwrap();
        assert_eq!(dump.num_vars, model.num_vars());
        assert_eq!(dump.offset, model.offset());
        assert_eq!(dump.linear, model.linear().collect::<Vec<_>>());
        let quad: Vec<_> = model.quadratic().iter().map(|&(i, j, c)| (i as usize, j as usize, c)).collect();
        assert_eq!(dump.quadratic, quad);
    }

    #[test]
    fn rejects_out_of_range() {
        let err = read_dump("qubo 2 0\n5 1.0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}

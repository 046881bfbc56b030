//! Text formats for solutions, residual traces and probability histograms.
//!
//! Numbers are written with Rust's shortest round-trip float formatting, so
//! parsing a file back yields bit-identical values.

use std::fmt::Write as _;

use thiserror::Error;

use crate::admm::IterationRecord;
use crate::model::{Commitment, UCSolution};
use crate::qaoa::ket_label;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing `# cost=` summary line")]
    MissingCost,
}

/// `unit,committed,p_mw` rows followed by `# cost=<value>`.
pub fn solution_csv(solution: &UCSolution) -> String {
    let mut out = String::from("unit,committed,p_mw\n");
    for (i, (&on, p)) in solution.commitment.bits().iter().zip(&solution.dispatch).enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, u8::from(on), p);
    }
    let _ = writeln!(out, "# cost={}", solution.cost);
    out
}

/// Inverse of [`solution_csv`]: `(commitment, dispatch, reported cost)`.
pub fn parse_solution_csv(text: &str) -> Result<(Commitment, Vec<f64>, f64), FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "unit,committed,p_mw")) => {}
        _ => {
            return Err(FormatError::Parse {
                line: 1,
                reason: "expected header `unit,committed,p_mw`".into(),
            })
        }
    }
    let mut bits = Vec::new();
    let mut dispatch = Vec::new();
    let mut cost = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let err = |reason: String| FormatError::Parse { line: line_no, reason };
        if let Some(value) = line.strip_prefix("# cost=") {
            cost = Some(value.parse::<f64>().map_err(|e| err(e.to_string()))?);
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let unit: usize = fields[0].parse().map_err(|_| err(format!("bad unit `{}`", fields[0])))?;
        if unit != bits.len() + 1 {
            return Err(err(format!("unit {unit} out of order")));
        }
        bits.push(match fields[1] {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("committed must be 0 or 1, found `{other}`"))),
        });
        dispatch.push(fields[2].parse().map_err(|_| err(format!("bad power `{}`", fields[2])))?);
    }
    let cost = cost.ok_or(FormatError::MissingCost)?;
    Ok((Commitment::new(bits), dispatch, cost))
}

/// `iter,residual,objective`.
pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::from("iter,residual,objective\n");
    for rec in trace {
        let _ = writeln!(out, "{},{},{}", rec.iter, rec.residual, rec.objective);
    }
    out
}

/// `bitstring,probability`, bitstrings highest unit first.
pub fn histogram_csv(probabilities: &[f64]) -> String {
    let n = probabilities.len().trailing_zeros() as usize;
    let mut out = String::from("bitstring,probability\n");
    for (x, p) in probabilities.iter().enumerate() {
        let _ = writeln!(out, "{},{}", ket_label(x, n), p);
    }
    out
}

//! Side-by-side comparison of two ADMM runs on the same instance.

use thiserror::Error;

use crate::admm::SolveReport;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("reports cover different instances ({0} vs {1} units)")]
pub struct InstanceMismatch(pub usize, pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDiff {
    pub same_commitment: bool,
    pub same_convergence: bool,
    /// `b - a`; `None` if either run lacks a feasible final solution.
    pub cost_delta: Option<f64>,
    pub iterations: (usize, usize),
    /// `(iter, residual_a, residual_b, residual_b / residual_a)` over the common prefix.
    pub residual_ratios: Vec<(usize, f64, f64, f64)>,
}

pub fn compare(a: &SolveReport, b: &SolveReport) -> Result<ReportDiff, InstanceMismatch> {
    if a.state.z.len() != b.state.z.len() {
        return Err(InstanceMismatch(a.state.z.len(), b.state.z.len()));
    }
    let cost_delta = match (&a.final_solution, &b.final_solution) {
        (Some(x), Some(y)) => Some(y.cost - x.cost),
        _ => None,
    };
    let residual_ratios = a
        .trace
        .iter()
        .zip(&b.trace)
        .map(|(x, y)| {
            let ratio = if x.residual == y.residual { 1.0 } else { y.residual / x.residual };
            (x.iter, x.residual, y.residual, ratio)
        })
        .collect();
    Ok(ReportDiff {
        same_commitment: a.commitment() == b.commitment(),
        same_convergence: a.status == b.status,
        cost_delta,
        iterations: (a.iterations, b.iterations),
        residual_ratios,
    })
}

impl std::fmt::Display for ReportDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "same_commitment={}", self.same_commitment)?;
        writeln!(f, "same_convergence={}", self.same_convergence)?;
        match self.cost_delta {
            Some(d) => writeln!(f, "cost_delta={d}")?,
            None => writeln!(f, "cost_delta=n/a")?,
        }
        writeln!(f, "iterations={},{}", self.iterations.0, self.iterations.1)?;
        writeln!(f, "iter,residual_a,residual_b,ratio")?;
        for (k, ra, rb, ratio) in &self.residual_ratios {
            writeln!(f, "{k},{ra},{rb},{ratio}")?;
        }
        Ok(())
    }
}

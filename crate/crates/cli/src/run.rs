//! Executes a resolved [`RunSpec`] and writes its artifacts.

use std::fs::{self, File};
use std::path::Path;

use anyhow::{bail, Context, Result};
use hybrid_uc::admm::{run_admm, SolveReport};
use hybrid_uc::io::{histogram_csv, solution_csv, trace_csv};
use hybrid_uc::{compare::compare, enumerate_uc, parse_generators, AdmmError, ModelError, SolveStatus, UCInstance};

use crate::config::{default_backend, Mode, RunSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved,
    /// No commitment (or no relaxed point) can serve the load.
    Infeasible(String),
    /// Iteration cap hit, or the terminal commitment cannot serve the load.
    NotConverged(String),
}

pub fn run(spec: &RunSpec) -> Result<Outcome> {
    let file = File::open(&spec.generators).with_context(|| format!("opening {}", spec.generators.display()))?;
    let generators = parse_generators(file).with_context(|| format!("reading {}", spec.generators.display()))?;
    let instance = UCInstance::new(generators, spec.load)?;
    fs::create_dir_all(&spec.out).with_context(|| format!("creating {}", spec.out.display()))?;

    if spec.mode == Mode::Baseline {
        return match enumerate_uc(&instance) {
            Ok(sol) => {
                write_atomic(&spec.out, "solution.csv", &solution_csv(&sol))?;
                println!("baseline: {} cost={}", sol.commitment, sol.cost);
                Ok(Outcome::Solved)
            }
            Err(e @ ModelError::Infeasible(_)) => Ok(Outcome::Infeasible(e.to_string())),
            Err(e) => Err(e.into()),
        };
    }

    let report = match run_admm(&instance, &spec.admm) {
        Ok(r) => r,
        Err(e @ AdmmError::InfeasibleRelaxation { .. }) => return Ok(Outcome::Infeasible(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    write_report(spec, &report)?;

    if let Some(other) = spec.compare_with {
        if other == Mode::Baseline {
            bail!("--compare-with takes s1 or s2");
        }
        let mut cfg = spec.admm.clone();
        cfg.backend = default_backend(other).to_owned();
        cfg.record_probabilities = false;
        let second = run_admm(&instance, &cfg)?;
        let diff = compare(&report, &second)?;
        write_atomic(&spec.out, "compare.txt", &diff.to_string())?;
    }

    let label = if spec.mode == Mode::S1 { "s1" } else { "s2" };
    println!(
        "{label}: {} {:?} after {} iterations, residual {:e}",
        report.commitment(),
        report.status,
        report.iterations,
        report.state.residual
    );
    Ok(match (report.status, &report.final_solution) {
        (SolveStatus::Converged, Some(sol)) => {
            println!("cost={}", sol.cost);
            Outcome::Solved
        }
        (SolveStatus::InfeasibleTerminalCommitment, _) => Outcome::NotConverged(format!(
            "converged to commitment {} which cannot serve {} MW",
            report.commitment(),
            spec.load
        )),
        _ => Outcome::NotConverged(format!(
            "residual {:e} above tolerance {:e} after {} iterations",
            report.state.residual, spec.admm.epsilon, report.iterations
        )),
    })
}

fn write_report(spec: &RunSpec, report: &SolveReport) -> Result<()> {
    write_atomic(&spec.out, "trace.csv", &trace_csv(&report.trace))?;
    if let Some(sol) = &report.final_solution {
        write_atomic(&spec.out, "solution.csv", &solution_csv(sol))?;
    }
    if spec.emit_histograms && spec.mode == Mode::S2 {
        for it in &report.qaoa_diagnostics {
            write_atomic(&spec.out, &format!("histogram_iter{}.csv", it.iter), &histogram_csv(&it.probabilities))?;
        }
    }
    Ok(())
}

/// Writes `name` under `dir` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let dest = dir.join(name);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &dest).with_context(|| format!("moving into {}", dest.display()))?;
    Ok(())
}

//! Named backends for the binary ADMM block.
//!
//! Every backend implements [`QuboSolver`]. [`SolverRegistry::builtin`]
//! knows `classical` (per-bit), `exact` (exhaustive) and `qaoa`
//! (statevector simulation); callers can register more under new names.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::qaoa::{self, QaoaConfig, QaoaError, QaoaParams};
use crate::qubo::{self, QuboError, QuboProblem};

pub const CLASSICAL: &str = "classical";
pub const EXACT: &str = "exact";
pub const QAOA: &str = "qaoa";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Qaoa(#[from] QaoaError),
    #[error("unknown QUBO solver `{name}`, registered: {known}")]
    Unknown { name: String, known: String },
}

/// Per-call inputs beyond the QUBO itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveContext<'a> {
    /// ADMM iteration, starting at 1.
    pub iteration: usize,
    /// Angles to start the variational search from, if any.
    pub warm_params: Option<&'a QaoaParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub bits: Vec<bool>,
    /// QUBO energy of `bits`, constant included.
    pub energy: f64,
    /// Optimized angles (variational backends only).
    pub params: Option<QaoaParams>,
    /// Final-state probability of every basis index (variational backends only).
    pub probabilities: Option<Vec<f64>>,
}

pub trait QuboSolver: Send + Sync {
    fn name(&self) -> &str;

    fn solve(&self, qubo: &QuboProblem, ctx: SolveContext<'_>) -> Result<BlockOutcome, SolverError>;
}

impl fmt::Debug for dyn QuboSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuboSolver({})", self.name())
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct PerBitSolver;

impl QuboSolver for PerBitSolver {
    fn name(&self) -> &str {
        CLASSICAL
    }

    fn solve(&self, qubo: &QuboProblem, _: SolveContext<'_>) -> Result<BlockOutcome, SolverError> {
        let (bits, energy) = qubo::solve_qubo_perbit(qubo)?;
        Ok(BlockOutcome { bits, energy, params: None, probabilities: None })
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ExhaustiveSolver;

impl QuboSolver for ExhaustiveSolver {
    fn name(&self) -> &str {
        EXACT
    }

    fn solve(&self, qubo: &QuboProblem, _: SolveContext<'_>) -> Result<BlockOutcome, SolverError> {
        let (bits, energy) = qubo::solve_qubo_exact(qubo)?;
        Ok(BlockOutcome { bits, energy, params: None, probabilities: None })
    }
}

#[derive(Debug, Clone)]
pub struct QaoaSolver {
    pub config: QaoaConfig,
}

impl QuboSolver for QaoaSolver {
    fn name(&self) -> &str {
        QAOA
    }

    fn solve(&self, qubo: &QuboProblem, ctx: SolveContext<'_>) -> Result<BlockOutcome, SolverError> {
        let outcome = qaoa::solve_qubo_qaoa(qubo, &self.config, ctx.warm_params)?;
        let energy = qubo.energy(&outcome.bits);
        Ok(BlockOutcome {
            bits: outcome.bits,
            energy,
            params: Some(outcome.params),
            probabilities: Some(outcome.probabilities),
        })
    }
}

/// Settings a factory may draw on when building a solver.
#[derive(Debug, Clone, Default)]
pub struct SolverSettings {
    pub qaoa: QaoaConfig,
}

pub type SolverFactory = fn(&SolverSettings) -> Box<dyn QuboSolver>;

pub struct SolverRegistry {
    factories: BTreeMap<String, SolverFactory>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(CLASSICAL, |_| Box::new(PerBitSolver));
        reg.register(EXACT, |_| Box::new(ExhaustiveSolver));
        reg.register(QAOA, |s| Box::new(QaoaSolver { config: s.qaoa.clone() }));
        reg
    }

    /// Adds or replaces the factory under `name`.
    pub fn register(&mut self, name: &str, factory: SolverFactory) {
        self.factories.insert(name.to_owned(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn create(&self, name: &str, settings: &SolverSettings) -> Result<Box<dyn QuboSolver>, SolverError> {
        match self.factories.get(name) {
            Some(factory) => Ok(factory(settings)),
            None => Err(SolverError::Unknown {
                name: name.to_owned(),
                known: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl fmt::Debug for SolverRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let reg = SolverRegistry::builtin();
        assert_eq!(reg.names().collect::<Vec<_>>(), vec![CLASSICAL, EXACT, QAOA]);
        let err = reg.create("anneal", &SolverSettings::default()).unwrap_err();
        assert!(err.to_string().contains("classical, exact, qaoa"));
    }

    #[test]
    fn backends_agree_on_easy_qubo() {
        let reg = SolverRegistry::builtin();
        let qubo = QuboProblem::new(vec![-3.0, 2.0, -1.0], 0.5);
        for name in [CLASSICAL, EXACT, QAOA] {
            let solver = reg.create(name, &SolverSettings::default()).unwrap();
            assert_eq!(solver.name(), name);
            let out = solver.solve(&qubo, SolveContext::default()).unwrap();
            assert_eq!(out.bits, vec![true, false, true], "{name}");
            assert_eq!(out.energy, -3.5);
            assert_eq!(out.params.is_some(), name == QAOA);
        }
    }

    #[test]
    fn custom_registration() {
        #[derive(Debug)]
        struct AllOn;
        impl QuboSolver for AllOn {
            fn name(&self) -> &str {
                "all-on"
            }
            fn solve(&self, qubo: &QuboProblem, _: SolveContext<'_>) -> Result<BlockOutcome, SolverError> {
                let bits = vec![true; qubo.n()];
                Ok(BlockOutcome { energy: qubo.energy(&bits), bits, params: None, probabilities: None })
            }
        }
        let mut reg = SolverRegistry::builtin();
        reg.register("all-on", |_| Box::new(AllOn));
        let solver = reg.create("all-on", &SolverSettings::default()).unwrap();
        let out = solver.solve(&QuboProblem::new(vec![1.0, 1.0], 0.0), SolveContext::default()).unwrap();
        assert_eq!(out.bits, vec![true, true]);
    }
}

//! Three-block ADMM coordinator.
//!
//! Each iteration minimizes the augmented Lagrangian
//!
//! ```text
//! L(y, p, z, r, λ) = Σ f_i(y_i, p_i) + β/2 Σ r_i² + Σ λ_i s_i + ρ/2 Σ s_i²,
//!     s_i = y_i - z_i + r_i
//! ```
//!
//! over `(y, p)` (relaxed QP), then `z` (binary block, via a registered
//! [`QuboSolver`]), then `r` (closed form), and finally takes the dual step
//! `λ += ρ/2 · s`. It stops once `Σ |s_i| <= ε` or the iteration cap is hit.

use thiserror::Error;

use crate::model::{economic_dispatch, evaluate_cost, Commitment, ModelError, UCInstance, UCSolution};
use crate::qaoa::{QaoaConfig, QaoaParams};
use crate::qp::{self, block1_objective, solve_block1, Block1Problem, QpError};
use crate::qubo::{build_qubo, QuboError, QuboProblem};
use crate::registry::{self, QuboSolver, SolveContext, SolverError, SolverRegistry, SolverSettings};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdmmError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("relaxed problem infeasible (load {load} MW, capacity {capacity} MW); the commitment problem is infeasible too")]
    InfeasibleRelaxation { load: f64, capacity: f64 },
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("first block: {0}")]
    Qp(QpError),
    #[error("second block: {0}")]
    Qubo(#[from] QuboError),
    #[error("second block: {0}")]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<QpError> for AdmmError {
    fn from(e: QpError) -> Self {
        match e {
            QpError::InfeasibleRelaxation { load, capacity } => AdmmError::InfeasibleRelaxation { load, capacity },
            QpError::LengthMismatch { expected, actual } => AdmmError::LengthMismatch { expected, actual },
            other => AdmmError::Qp(other),
        }
    }
}

/// Load-keyed penalty pairs `(rho, beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyPreset {
    pub rho: f64,
    pub beta: f64,
}

impl PenaltyPreset {
    /// Below 100 MW: `beta = 1e6`, `rho = beta + 1`. Up to 200 MW:
    /// `(1001, 1000)`. Above: `(4000, 1000)`.
    pub fn for_load(load: f64) -> Self {
        if load < 100.0 {
            Self { rho: 1e6 + 1.0, beta: 1e6 }
        } else if load <= 200.0 {
            Self { rho: 1001.0, beta: 1000.0 }
        } else {
            Self { rho: 4000.0, beta: 1000.0 }
        }
    }
}

/// How `z` is seeded before the first iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCommitment {
    AllOn,
    AllOff,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub rho: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    /// Registry name of the binary-block solver.
    pub backend: String,
    pub qaoa: QaoaConfig,
    /// Start each variational search from the previous iteration's angles.
    pub warm_start: bool,
    pub initial_z: InitialCommitment,
    /// `None` means zeros.
    pub initial_r: Option<Vec<f64>>,
    /// `None` means zeros.
    pub initial_lambda: Option<Vec<f64>>,
    pub qp_tolerance: f64,
    /// Keep per-iteration probability maps from variational backends.
    pub record_probabilities: bool,
}

impl AdmmConfig {
    /// Defaults with penalties taken from [`PenaltyPreset::for_load`].
    pub fn for_load(load: f64) -> Self {
        let preset = PenaltyPreset::for_load(load);
        Self {
            rho: preset.rho,
            beta: preset.beta,
            epsilon: 1e-6,
            max_iters: 1000,
            backend: registry::CLASSICAL.to_owned(),
            qaoa: QaoaConfig::default(),
            warm_start: true,
            initial_z: InitialCommitment::AllOn,
            initial_r: None,
            initial_lambda: None,
            qp_tolerance: qp::DEFAULT_TOLERANCE,
            record_probabilities: false,
        }
    }

    pub fn with_backend(mut self, name: &str) -> Self {
        self.backend = name.to_owned();
        self
    }

    pub fn validate(&self, n: usize) -> Result<(), AdmmError> {
        if !(self.beta > 0.0 && self.rho > self.beta) || !self.rho.is_finite() {
            return Err(AdmmError::Config(format!(
                "penalties must satisfy rho > beta > 0, got rho={} beta={}",
                self.rho, self.beta
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(AdmmError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(AdmmError::Config("max_iters must be at least 1".into()));
        }
        if let InitialCommitment::Explicit(z) = &self.initial_z {
            check_len(n, z.len())?;
            if z.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(AdmmError::Config("initial z must be binary".into()));
            }
        }
        for v in [&self.initial_r, &self.initial_lambda].into_iter().flatten() {
            check_len(n, v.len())?;
        }
        Ok(())
    }
}

fn check_len(expected: usize, actual: usize) -> Result<(), AdmmError> {
    if expected != actual {
        return Err(AdmmError::LengthMismatch { expected, actual });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub iter: usize,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub residual: f64,
    /// Angles carried between iterations for warm starts.
    pub qaoa_params: Option<QaoaParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual: f64,
    /// Augmented Lagrangian after the third block, before the dual step.
    pub objective: f64,
    pub block1_objective: f64,
    pub qubo_energy: f64,
}

/// What the variational backend did in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaIteration {
    pub iter: usize,
    pub qubo: QuboProblem,
    /// Warm-start angles handed to the solver, if any.
    pub start_params: Option<QaoaParams>,
    pub params: QaoaParams,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    /// Residual met the tolerance but the binary commitment cannot serve the load.
    InfeasibleTerminalCommitment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub state: AdmmState,
    /// Terminal `z` with its economic dispatch; `None` when `z` cannot serve the load.
    pub final_solution: Option<UCSolution>,
    pub trace: Vec<IterationRecord>,
    /// Every variational iteration when recording is on, otherwise only the last.
    pub qaoa_diagnostics: Vec<QaoaIteration>,
    pub last_qubo: Option<QuboProblem>,
    pub backend: String,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn commitment(&self) -> Commitment {
        Commitment::new(self.state.z.iter().map(|&v| v == 1.0).collect())
    }
}

/// Unique minimizer over `r` of the augmented Lagrangian:
/// `r_i = -(lambda_i + rho (y_i - z_i)) / (beta + rho)`.
pub fn update_r(y: &[f64], z: &[f64], lambda: &[f64], rho: f64, beta: f64) -> Vec<f64> {
    assert!(y.len() == z.len() && z.len() == lambda.len(), "length mismatch");
    y.iter()
        .zip(z)
        .zip(lambda)
        .map(|((y, z), l)| -(l + rho * (y - z)) / (beta + rho))
        .collect()
}

/// `lambda + rho/2 (y - z + r)`.
pub fn update_dual(lambda: &[f64], y: &[f64], z: &[f64], r: &[f64], rho: f64) -> Result<Vec<f64>, AdmmError> {
    let n = lambda.len();
    for len in [y.len(), z.len(), r.len()] {
        check_len(n, len)?;
    }
    Ok((0..n).map(|i| lambda[i] + 0.5 * rho * (y[i] - z[i] + r[i])).collect())
}

/// `Σ_i |y_i - z_i + r_i|`.
pub fn residual(y: &[f64], z: &[f64], r: &[f64]) -> Result<f64, AdmmError> {
    check_len(y.len(), z.len())?;
    check_len(y.len(), r.len())?;
    Ok(y.iter().zip(z).zip(r).map(|((y, z), r)| (y - z + r).abs()).sum())
}

/// Full augmented Lagrangian at a point.
#[allow(clippy::too_many_arguments)]
pub fn augmented_lagrangian(
    instance: &UCInstance,
    y: &[f64],
    p: &[f64],
    z: &[f64],
    r: &[f64],
    lambda: &[f64],
    rho: f64,
    beta: f64,
) -> Result<f64, AdmmError> {
    let prob = Block1Problem { instance, z, r, lambda, rho, beta };
    Ok(block1_objective(&prob, y, p)?)
}

pub fn run_admm(instance: &UCInstance, config: &AdmmConfig) -> Result<SolveReport, AdmmError> {
    run_admm_with(instance, config, &SolverRegistry::builtin())
}

pub fn run_admm_with(
    instance: &UCInstance,
    config: &AdmmConfig,
    registry: &SolverRegistry,
) -> Result<SolveReport, AdmmError> {
    let n = instance.len();
    config.validate(n)?;
    let settings = SolverSettings { qaoa: config.qaoa.clone() };
    let solver: Box<dyn QuboSolver> = registry.create(&config.backend, &settings)?;
    let (rho, beta) = (config.rho, config.beta);

    let mut state = AdmmState {
        iter: 0,
        y: vec![0.0; n],
        p: vec![0.0; n],
        z: match &config.initial_z {
            InitialCommitment::AllOn => vec![1.0; n],
            InitialCommitment::AllOff => vec![0.0; n],
            InitialCommitment::Explicit(z) => z.clone(),
        },
        r: config.initial_r.clone().unwrap_or_else(|| vec![0.0; n]),
        lambda: config.initial_lambda.clone().unwrap_or_else(|| vec![0.0; n]),
        residual: f64::INFINITY,
        qaoa_params: None,
    };
    let mut trace = Vec::new();
    let mut diagnostics = Vec::new();
    let mut last_qubo = None;
    let mut converged = false;

    for iter in 1..=config.max_iters {
        state.iter = iter;

        let block1 = solve_block1(
            &Block1Problem {
                instance,
                z: &state.z,
                r: &state.r,
                lambda: &state.lambda,
                rho,
                beta,
            },
            config.qp_tolerance,
        )?;
        state.y = block1.y;
        state.p = block1.p;

        let qubo = build_qubo(&state.y, &state.r, &state.lambda, rho)?;
        let warm = if config.warm_start && iter > 1 {
            state.qaoa_params.clone()
        } else {
            None
        };
        let outcome = solver.solve(
            &qubo,
            SolveContext {
                iteration: iter,
                warm_params: warm.as_ref(),
            },
        )?;
        state.z = outcome.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        if let Some(params) = outcome.params {
            if !config.record_probabilities {
                diagnostics.clear();
            }
            diagnostics.push(QaoaIteration {
                iter,
                qubo: qubo.clone(),
                start_params: warm,
                params: params.clone(),
                probabilities: outcome.probabilities.unwrap_or_default(),
            });
            state.qaoa_params = Some(params);
        }

        state.r = update_r(&state.y, &state.z, &state.lambda, rho, beta);
        let objective =
            augmented_lagrangian(instance, &state.y, &state.p, &state.z, &state.r, &state.lambda, rho, beta)?;
        state.lambda = update_dual(&state.lambda, &state.y, &state.z, &state.r, rho)?;
        state.residual = residual(&state.y, &state.z, &state.r)?;
        last_qubo = Some(qubo);

        trace.push(IterationRecord {
            iter,
            residual: state.residual,
            objective,
            block1_objective: block1.objective,
            qubo_energy: outcome.energy,
        });
        if state.residual <= config.epsilon {
            converged = true;
            break;
        }
    }

    let commitment = Commitment::new(state.z.iter().map(|&v| v == 1.0).collect());
    let final_solution = match economic_dispatch(instance, &commitment) {
        Ok(dispatch) => {
            let cost = evaluate_cost(instance, &commitment, &dispatch)?;
            Some(UCSolution { commitment, dispatch, cost })
        }
        Err(ModelError::InfeasibleCommitment { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let status = match (converged, &final_solution) {
        (true, Some(_)) => SolveStatus::Converged,
        (true, None) => SolveStatus::InfeasibleTerminalCommitment,
        (false, _) => SolveStatus::IterationLimit,
    };

    Ok(SolveReport {
        status,
        iterations: state.iter,
        state,
        final_solution,
        trace,
        qaoa_diagnostics: diagnostics,
        last_qubo,
        backend: solver.name().to_owned(),
    })
}

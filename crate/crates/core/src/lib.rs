//! Single-period unit commitment solved by a three-block ADMM.
//!
//! The problem is split into a relaxed commitment/dispatch QP ([`qp`]), a
//! binary block ([`qubo`]) and a closed-form auxiliary update
//! ([`admm::update_r`]). The binary block is dispatched through
//! [`registry::SolverRegistry`] to either an exact classical solver or a
//! statevector QAOA simulation ([`qaoa`]).

pub mod admm;
pub mod compare;
pub mod io;
pub mod model;
pub mod qaoa;
pub mod qp;
pub mod qubo;
pub mod registry;

pub use admm::{run_admm, AdmmConfig, AdmmError, AdmmState, PenaltyPreset, SolveReport, SolveStatus};
pub use model::{
    check_feasible, economic_dispatch, enumerate_uc, evaluate_cost, parse_generators, Commitment,
    GeneratorParams, ModelError, UCInstance, UCSolution,
};
pub use qaoa::{QaoaConfig, QaoaOutcome, QaoaParams, Statevector};
pub use qubo::{IsingProblem, QuboProblem};
pub use registry::{QuboSolver, SolverRegistry};

mod common;

use hybrid_uc::admm::update_r;
use hybrid_uc::{enumerate_uc, run_admm, AdmmConfig, SolveStatus};
use proptest::prelude::*;

proptest! {
    #[test]
    fn closed_form_r_is_optimal(
        y in 0.0..=1.0f64,
        z in prop::bool::ANY,
        lambda in -1e4..1e4f64,
        beta in 1.0..1e6f64,
        extra in 1e-3..1e3f64,
    ) {
        let z = if z { 1.0 } else { 0.0 };
        let rho = beta + extra;
        let r = update_r(&[y], &[z], &[lambda], rho, beta)[0];
        let f = |r| common::r_terms(r, y, z, lambda, rho, beta);
        prop_assert!(f(r) <= f(r + 1e-3));
        prop_assert!(f(r) <= f(r - 1e-3));
    }
}

#[test]
fn reported_convergence_is_sound() {
    for load in [100.0, 200.0, 400.0, 800.0, 1000.0] {
        let inst = common::instance("table1_case_study.csv", load);
        let cfg = AdmmConfig::for_load(load);
        let report = run_admm(&inst, &cfg).unwrap();
        if report.status != SolveStatus::IterationLimit {
            assert!(report.state.residual <= cfg.epsilon);
        }
        assert_eq!(report.trace.len(), report.iterations);
        assert!(report.trace.iter().all(|t| t.residual.is_finite() && t.objective.is_finite()));
        assert_eq!(report, run_admm(&inst, &cfg).unwrap(), "L={load} not reproducible");

        if report.converged() {
            let best = enumerate_uc(&inst).unwrap();
            let cost = report.final_solution.unwrap().cost;
            assert!((cost - best.cost).abs() <= 1e-4 * best.cost, "L={load}: {cost} vs {}", best.cost);
        }
    }
}

#[test]
fn classical_and_qaoa_backends_agree() {
    for load in [100.0, 400.0] {
        let inst = common::instance("table1_case_study.csv", load);
        let s1 = run_admm(&inst, &AdmmConfig::for_load(load)).unwrap();
        let s2 = run_admm(&inst, &AdmmConfig::for_load(load).with_backend("qaoa")).unwrap();
        assert!(s1.converged() && s2.converged());
        assert_eq!(s1.commitment(), s2.commitment(), "L={load}");
    }
}

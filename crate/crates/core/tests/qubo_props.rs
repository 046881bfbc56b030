mod common;

use hybrid_uc::qubo::{build_qubo, solve_qubo_exact, solve_qubo_perbit, to_spin};
use proptest::prelude::*;

fn bits_of(x: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| x >> i & 1 == 1).collect()
}

fn inputs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (1..=10usize).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..=1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-1e4..1e4f64, n),
            1e-3..1e6f64,
        )
    })
}

proptest! {
    #[test]
    fn qubo_energy_equals_direct_terms((y, r, lambda, rho) in inputs()) {
        let n = y.len();
        let qubo = build_qubo(&y, &r, &lambda, rho).unwrap();
        for x in 0..1usize << n {
            let z = bits_of(x, n);
            let direct = common::direct_z_terms(&y, &z, &r, &lambda, rho);
            let e = qubo.energy(&z);
            prop_assert!((e - direct).abs() <= 1e-9 * direct.abs().max(1.0), "{e} vs {direct}");
        }
    }

    #[test]
    fn spin_form_round_trips((y, r, lambda, rho) in inputs()) {
        let n = y.len();
        let qubo = build_qubo(&y, &r, &lambda, rho).unwrap();
        let ising = to_spin(&qubo);
        for x in 0..1usize << n {
            let z = bits_of(x, n);
            let s: Vec<i8> = z.iter().map(|&b| if b { 1 } else { -1 }).collect();
            let (a, b) = (ising.energy(&s), qubo.energy(&z));
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn perbit_matches_exhaustive((y, r, lambda, rho) in inputs()) {
        let qubo = build_qubo(&y, &r, &lambda, rho).unwrap();
        prop_assert_eq!(solve_qubo_perbit(&qubo).unwrap(), solve_qubo_exact(&qubo).unwrap());
    }
}

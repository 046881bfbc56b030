mod common;

use hybrid_uc::qp::{block1_objective, solve_block1, Block1Problem, DEFAULT_TOLERANCE};
use hybrid_uc::{GeneratorParams, UCInstance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 4;

#[derive(Debug, Clone)]
struct Case {
    gens: Vec<GeneratorParams>,
    load_frac: f64,
    z: Vec<f64>,
    r: Vec<f64>,
    lambda: Vec<f64>,
    rho: f64,
}

fn case() -> impl Strategy<Value = Case> {
    let gen = (0.0..500.0f64, 5.0..40.0f64, 1e-3..0.05f64, 0.0..30.0f64, 5.0..80.0f64);
    (
        prop::collection::vec(gen, N),
        0.05..0.95f64,
        prop::collection::vec(prop::bool::ANY, N),
        prop::collection::vec(-0.5..0.5f64, N),
        prop::collection::vec(-200.0..200.0f64, N),
        prop::sample::select(vec![2.0, 50.0, 1001.0, 4000.0]),
    )
        .prop_map(|(raw, load_frac, z, r, lambda, rho)| Case {
            gens: raw
                .into_iter()
                .enumerate()
                .map(|(i, (a, b, c, p_min, w))| GeneratorParams { id: i + 1, a, b, c, p_min, p_max: p_min + w })
                .collect(),
            load_frac,
            z: z.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect(),
            r,
            lambda,
            rho,
        })
}

impl Case {
    fn instance(&self) -> UCInstance {
        let cap: f64 = self.gens.iter().map(|g| g.p_max).sum();
        UCInstance::new(self.gens.clone(), self.load_frac * cap).unwrap()
    }

    fn problem<'a>(&'a self, inst: &'a UCInstance) -> Block1Problem<'a> {
        Block1Problem { instance: inst, z: &self.z, r: &self.r, lambda: &self.lambda, rho: self.rho, beta: 1.0 }
    }
}

/// A point of the relaxed feasible set, or `None` if the drawn `y` cannot carry the load.
fn random_feasible(inst: &UCInstance, rng: &mut impl Rng) -> Option<(Vec<f64>, Vec<f64>)> {
    let y: Vec<f64> = (0..inst.len()).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let lo: Vec<f64> = inst.generators().iter().zip(&y).map(|(g, y)| g.p_min * y).collect();
    let hi: Vec<f64> = inst.generators().iter().zip(&y).map(|(g, y)| g.p_max * y).collect();
    let (slo, shi): (f64, f64) = (lo.iter().sum(), hi.iter().sum());
    if inst.load() < slo || inst.load() > shi {
        return None;
    }
    let t = if shi > slo { (inst.load() - slo) / (shi - slo) } else { 0.0 };
    Some((y, lo.iter().zip(&hi).map(|(l, h)| l + t * (h - l)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beats_random_feasible_points(case in case(), seed in any::<u64>()) {
        let inst = case.instance();
        let prob = case.problem(&inst);
        let sol = solve_block1(&prob, DEFAULT_TOLERANCE).unwrap();
        prop_assert!(sol.kkt_residual <= DEFAULT_TOLERANCE);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        for _ in 0..10_000 {
            if checked == 100 {
                break;
            }
            if let Some((y, p)) = random_feasible(&inst, &mut rng) {
                checked += 1;
                let v = block1_objective(&prob, &y, &p).unwrap();
                prop_assert!(sol.objective <= v + 1e-9 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn unit_order_does_not_matter(case in case(), perm in Just((0..N).collect::<Vec<_>>()).prop_shuffle()) {
        let inst = case.instance();
        let base = solve_block1(&case.problem(&inst), DEFAULT_TOLERANCE).unwrap();

        // Unit k of the permuted fleet is unit perm[k] of the original.
        let relabeled = Case {
            gens: perm
                .iter()
                .enumerate()
                .map(|(k, &i)| GeneratorParams { id: k + 1, ..case.gens[i].clone() })
                .collect(),
            z: perm.iter().map(|&i| case.z[i]).collect(),
            r: perm.iter().map(|&i| case.r[i]).collect(),
            lambda: perm.iter().map(|&i| case.lambda[i]).collect(),
            ..case.clone()
        };
        let inst2 = relabeled.instance();
        let other = solve_block1(&relabeled.problem(&inst2), DEFAULT_TOLERANCE).unwrap();
        let tol = 10.0 * DEFAULT_TOLERANCE;
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((other.y[k] - base.y[i]).abs() <= tol, "y {} vs {}", other.y[k], base.y[i]);
            prop_assert!((other.p[k] - base.p[i]).abs() <= tol * base.p[i].abs().max(1.0));
        }
        prop_assert!((other.objective - base.objective).abs() <= tol * base.objective.abs().max(1.0));
    }
}

#[test]
fn larger_penalty_pulls_y_to_z() {
    let inst = common::instance("table1_case_study.csv", 400.0);
    let z: Vec<f64> = (0..10).map(|i| if i % 3 == 0 { 0.0 } else { 1.0 }).collect();
    let zeros = vec![0.0; 10];
    let mut prev = f64::INFINITY;
    let mut rho = 1.0;
    for _ in 0..16 {
        let prob = Block1Problem { instance: &inst, z: &z, r: &zeros, lambda: &zeros, rho, beta: 0.5 };
        let sol = solve_block1(&prob, DEFAULT_TOLERANCE).unwrap();
        let gap: f64 = sol.y.iter().zip(&z).map(|(y, z)| (y - z).abs()).sum();
        assert!(gap <= prev + 1e-9, "rho={rho}: gap {gap} grew from {prev}");
        prev = gap;
        rho *= 2.0;
    }
}

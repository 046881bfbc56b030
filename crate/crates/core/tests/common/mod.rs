//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use hybrid_uc::{parse_generators, GeneratorParams, UCInstance};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn load_generators(name: &str) -> Vec<GeneratorParams> {
    let file = std::fs::File::open(data_path(name)).expect("data file");
    parse_generators(file).expect("valid generator file")
}

pub fn instance(name: &str, load: f64) -> UCInstance {
    UCInstance::new(load_generators(name), load).unwrap()
}

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut m1 = hi - g * (hi - lo);
    let mut m2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(m1), f(m2));
    for _ in 0..200 {
        if hi - lo < 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        if f1 < f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - g * (hi - lo);
            f1 = f(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + g * (hi - lo);
            f2 = f(m2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// z-dependent part of the augmented Lagrangian, evaluated term by term.
pub fn direct_z_terms(y: &[f64], z: &[bool], r: &[f64], lambda: &[f64], rho: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        let zi = if z[i] { 1.0 } else { 0.0 };
        let s = y[i] - zi + r[i];
        total += lambda[i] * s + 0.5 * rho * s * s;
    }
    total
}

/// `r`-dependent part of the augmented Lagrangian for one unit.
pub fn r_terms(r: f64, y: f64, z: f64, lambda: f64, rho: f64, beta: f64) -> f64 {
    let s = y - z + r;
    0.5 * beta * r * r + lambda * s + 0.5 * rho * s * s
}

/// Per-unit first-block value at output `p`, minimized over the commitment
/// variable in closed form.
fn unit_value(g: &GeneratorParams, p: f64, z: f64, r: f64, lambda: f64, rho: f64) -> f64 {
    let lo = p / g.p_max;
    let hi = if g.p_min > 0.0 { (p / g.p_min).min(1.0) } else { 1.0 };
    let free = z - r - (g.a + lambda) / rho;
    let y = free.clamp(lo, hi);
    let s = y - z + r;
    g.a * y + g.b * p + g.c * p * p + lambda * s + 0.5 * rho * s * s
}

/// Two-unit first-block minimum: grid over `p_1` with step `1e-3`, then a
/// golden-section refinement inside the best grid cell. `beta/2 r^2` included.
pub fn two_unit_grid_min(
    gens: &[GeneratorParams; 2],
    load: f64,
    z: [f64; 2],
    r: [f64; 2],
    lambda: [f64; 2],
    rho: f64,
    beta: f64,
) -> f64 {
    let lo = (load - gens[1].p_max).max(0.0);
    let hi = gens[0].p_max.min(load);
    let value = |p1: f64| {
        let p1 = p1.clamp(lo, hi);
        unit_value(&gens[0], p1, z[0], r[0], lambda[0], rho)
            + unit_value(&gens[1], load - p1, z[1], r[1], lambda[1], rho)
            + 0.5 * beta * (r[0] * r[0] + r[1] * r[1])
    };
    let step = 1e-3;
    let steps = ((hi - lo) / step).ceil() as usize;
    let mut best = (lo, value(lo));
    for k in 1..=steps {
        let p = (lo + k as f64 * step).min(hi);
        let v = value(p);
        if v < best.1 {
            best = (p, v);
        }
    }
    let (_, refined) = golden_min(value, (best.0 - step).max(lo), (best.0 + step).min(hi));
    refined.min(best.1)
}

/// Single-qubit operator on qubit `q` of an `n`-qubit register; qubit 0 is
/// the least significant index bit.
fn embed(op: &DMatrix<Complex64>, q: usize, n: usize) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let mut full = DMatrix::<Complex64>::identity(1, 1);
    for k in (0..n).rev() {
        full = full.kronecker(if k == q { op } else { &id });
    }
    full
}

/// Circuit state from explicit `2^n x 2^n` unitaries. `diag` holds the cost
/// operator eigenvalues by basis index.
pub fn dense_circuit(diag: &[f64], gammas: &[f64], betas: &[f64]) -> Vec<Complex64> {
    let dim = diag.len();
    let n = dim.trailing_zeros() as usize;
    let mut state = DVector::from_element(dim, Complex64::new(1.0 / (dim as f64).sqrt(), 0.0));
    for (&gamma, &beta) in gammas.iter().zip(betas) {
        let cost = DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            diag.iter().map(|&e| Complex64::from_polar(1.0, PI * gamma * e / 2.0)),
        ));
        let theta = PI * beta / 2.0;
        let x_rot = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(theta.cos(), 0.0),
                Complex64::new(0.0, theta.sin()),
                Complex64::new(0.0, theta.sin()),
                Complex64::new(theta.cos(), 0.0),
            ],
        );
        let mut mixer = DMatrix::<Complex64>::identity(dim, dim);
        for q in 0..n {
            mixer = embed(&x_rot, q, n) * mixer;
        }
        state = &mixer * (&cost * state);
    }
    state.iter().copied().collect()
}

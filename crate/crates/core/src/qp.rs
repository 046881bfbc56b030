//! First ADMM block: the relaxed commitment/dispatch QP.
//!
//! Variables are the relaxed commitment `y in [0, 1]^N` and dispatch `p`.
//! The objective is the augmented Lagrangian with `z`, `r`, `lambda` held
//! fixed, subject to power balance and `p_min y <= p <= p_max y`.
//!
//! Solved by a dense Mehrotra predictor-corrector interior-point method on
//! `min 1/2 x'Hx + g'x  s.t.  Ax = b, Gx <= h` followed by an active-set
//! polish that solves the KKT system of the identified active constraints.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::UCInstance;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

const MAX_IPM_ITERS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("relaxed problem infeasible: load {load} MW outside [0, {capacity}] MW")]
    InfeasibleRelaxation { load: f64, capacity: f64 },
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("penalty rho must be positive, got {0}")]
    InvalidPenalty(f64),
    #[error("tolerance must be at least 1e-12, got {0}")]
    InvalidTolerance(f64),
    #[error("interior-point method stalled with KKT residual {0:e}")]
    NotConverged(f64),
}

#[derive(Debug, Clone)]
pub struct Block1Problem<'a> {
    pub instance: &'a UCInstance,
    pub z: &'a [f64],
    pub r: &'a [f64],
    pub lambda: &'a [f64],
    pub rho: f64,
    /// Only enters through the constant `beta/2 ||r||^2`.
    pub beta: f64,
}

impl Block1Problem<'_> {
    fn validate(&self) -> Result<(), QpError> {
        let n = self.instance.len();
        for len in [self.z.len(), self.r.len(), self.lambda.len()] {
            if len != n {
                return Err(QpError::LengthMismatch { expected: n, actual: len });
            }
        }
        if !(self.rho > 0.0) {
            return Err(QpError::InvalidPenalty(self.rho));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block1Solution {
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
}

/// Augmented Lagrangian value at `(y, p)` with the block's fixed data.
pub fn block1_objective(problem: &Block1Problem<'_>, y: &[f64], p: &[f64]) -> Result<f64, QpError> {
    let n = problem.instance.len();
    for len in [y.len(), p.len(), problem.z.len(), problem.r.len(), problem.lambda.len()] {
        if len != n {
            return Err(QpError::LengthMismatch { expected: n, actual: len });
        }
    }
    let mut total = 0.0;
    for (i, g) in problem.instance.generators().iter().enumerate() {
        let slack = y[i] - problem.z[i] + problem.r[i];
        total += g.a * y[i] + g.b * p[i] + g.c * p[i] * p[i];
        total += 0.5 * problem.beta * problem.r[i] * problem.r[i];
        total += problem.lambda[i] * slack + 0.5 * problem.rho * slack * slack;
    }
    Ok(total)
}

/// Dense QP data `min 1/2 x'Hx + g'x + c0, Ax = b, Gx <= h` for block 1.
///
/// `x = (y_1..y_N, p_1..p_N)`; `H` is diagonal. Inequality rows come in
/// groups of four per unit: `p_min y - p`, `p - p_max y`, `-y`, `y - 1`.
struct QpData {
    n: usize,
    h_diag: DVector<f64>,
    g: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    gm: DMatrix<f64>,
    hv: DVector<f64>,
}

impl QpData {
    fn build(problem: &Block1Problem<'_>) -> Self {
        let inst = problem.instance;
        let n = inst.len();
        let mut h_diag = DVector::zeros(2 * n);
        let mut g = DVector::zeros(2 * n);
        let mut a = DMatrix::zeros(1, 2 * n);
        let mut gm = DMatrix::zeros(4 * n, 2 * n);
        let mut hv = DVector::zeros(4 * n);
        for (i, u) in inst.generators().iter().enumerate() {
            h_diag[i] = problem.rho;
            h_diag[n + i] = 2.0 * u.c;
            g[i] = u.a + problem.lambda[i] + problem.rho * (problem.r[i] - problem.z[i]);
            g[n + i] = u.b;
            a[(0, n + i)] = 1.0;

            let row = 4 * i;
            gm[(row, i)] = u.p_min;
            gm[(row, n + i)] = -1.0;
            gm[(row + 1, i)] = -u.p_max;
            gm[(row + 1, n + i)] = 1.0;
            gm[(row + 2, i)] = -1.0;
            gm[(row + 3, i)] = 1.0;
            hv[row + 3] = 1.0;
        }
        let b = DVector::from_element(1, inst.load());
        Self { n, h_diag, g, a, b, gm, hv }
    }

    fn objective_scale(&self) -> f64 {
        self.g.amax().max(self.h_diag.amax()).max(1.0)
    }

    fn primal_scale(&self) -> f64 {
        self.b.amax().max(1.0)
    }
}

struct KktPoint {
    x: DVector<f64>,
    nu: DVector<f64>,
    zd: DVector<f64>,
}

/// Scaled KKT residual: max of stationarity, primal infeasibility,
/// complementarity and dual sign violation.
fn kkt_residual(data: &QpData, pt: &KktPoint) -> f64 {
    let oscale = data.objective_scale();
    let pscale = data.primal_scale();
    let stat = data.h_diag.component_mul(&pt.x) + &data.g + data.a.transpose() * &pt.nu
        + data.gm.transpose() * &pt.zd;
    let eq = &data.a * &pt.x - &data.b;
    let slack = &data.hv - &data.gm * &pt.x;
    let mut res = stat.amax() / oscale;
    res = res.max(eq.amax() / pscale);
    for k in 0..slack.len() {
        res = res.max((-slack[k]).max(0.0) / pscale);
        res = res.max((pt.zd[k] * slack[k]).abs() / (oscale * pscale));
        res = res.max((-pt.zd[k]).max(0.0) / oscale);
    }
    res
}

/// Minimizes the block-1 augmented Lagrangian over `(y, p)`.
pub fn solve_block1(problem: &Block1Problem<'_>, tol: f64) -> Result<Block1Solution, QpError> {
    problem.validate()?;
    if !(tol >= 1e-12) {
        return Err(QpError::InvalidTolerance(tol));
    }
    let inst = problem.instance;
    let capacity = inst.total_capacity();
    let load = inst.load();
    if load < 0.0 || load > capacity * (1.0 + 1e-12) {
        return Err(QpError::InfeasibleRelaxation { load, capacity });
    }

    let data = QpData::build(problem);
    let mut pt = interior_point(&data, tol)?;
    if let Some(polished) = polish(&data, &pt) {
        if kkt_residual(&data, &polished) <= kkt_residual(&data, &pt) {
            pt = polished;
        }
    }
    let residual = kkt_residual(&data, &pt);
    if residual > tol {
        return Err(QpError::NotConverged(residual));
    }

    let n = data.n;
    let y: Vec<f64> = (0..n).map(|i| pt.x[i].clamp(0.0, 1.0)).collect();
    let p: Vec<f64> = (0..n).map(|i| pt.x[n + i]).collect();
    let objective = block1_objective(problem, &y, &p)?;
    Ok(Block1Solution {
        y,
        p,
        objective,
        kkt_residual: residual,
    })
}

/// Newton direction `(dx, dnu, ds, dz)`.
type Direction = (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>);

fn interior_point(data: &QpData, tol: f64) -> Result<KktPoint, QpError> {
    let nx = 2 * data.n;
    let m = data.hv.len();
    let oscale = data.objective_scale();

    // Work on the objective divided by its scale so multipliers stay O(1).
    let hs = &data.h_diag / oscale;
    let gs = &data.g / oscale;

    let mut x = DVector::zeros(nx);
    let n = data.n;
    let total_max: f64 = (0..n).map(|i| -data.gm[(4 * i + 1, i)]).sum();
    let share = if total_max > 0.0 { data.b[0] / total_max } else { 0.0 };
    for i in 0..n {
        let pmax = -data.gm[(4 * i + 1, i)];
        x[i] = 0.5 + 0.5 * share;
        x[n + i] = pmax * share;
    }
    let mut nu = DVector::zeros(1);
    let mut s = (&data.hv - &data.gm * &x).map(|v| v.max(1.0));
    let mut zd = DVector::from_element(m, 1.0);

    let mut best: Option<(f64, KktPoint)> = None;
    for _ in 0..MAX_IPM_ITERS {
        let r_d = hs.component_mul(&x) + &gs + data.a.transpose() * &nu + data.gm.transpose() * &zd;
        let r_p = &data.a * &x - &data.b;
        let r_i = &data.gm * &x + &s - &data.hv;
        let mu = s.dot(&zd) / m as f64;

        let candidate = KktPoint {
            x: x.clone(),
            nu: &nu * oscale,
            zd: &zd * oscale,
        };
        let res = kkt_residual(data, &candidate);
        if best.as_ref().is_none_or(|(b, _)| res < *b) {
            best = Some((res, candidate));
        }
        let pscale = data.primal_scale();
        if r_d.amax() <= 0.1 * tol
            && r_p.amax() <= 0.1 * tol * pscale
            && r_i.amax() <= 0.1 * tol * pscale
            && mu <= 0.01 * tol
        {
            break;
        }

        let w = zd.component_div(&s);
        let mut k = DMatrix::zeros(nx + 1, nx + 1);
        let gtwg = data.gm.transpose() * DMatrix::from_diagonal(&w) * &data.gm;
        k.view_mut((0, 0), (nx, nx)).copy_from(&gtwg);
        for j in 0..nx {
            k[(j, j)] += hs[j];
        }
        for j in 0..nx {
            k[(nx, j)] = data.a[(0, j)];
            k[(j, nx)] = data.a[(0, j)];
        }
        let lu = k.lu();

        let solve = |rc: &DVector<f64>| -> Option<Direction> {
            let tmp = rc.component_div(&s) + w.component_mul(&r_i);
            let rhs_x = -&r_d - data.gm.transpose() * tmp;
            let mut rhs = DVector::zeros(nx + 1);
            rhs.rows_mut(0, nx).copy_from(&rhs_x);
            rhs[nx] = -r_p[0];
            let sol = lu.solve(&rhs)?;
            let dx = sol.rows(0, nx).into_owned();
            let dnu = sol.rows(nx, 1).into_owned();
            let ds = -&r_i - &data.gm * &dx;
            let dz = (rc - zd.component_mul(&ds)).component_div(&s);
            Some((dx, dnu, ds, dz))
        };

        // Predictor.
        let rc_aff = -s.component_mul(&zd);
        let Some((_, _, ds_a, dz_a)) = solve(&rc_aff) else {
            break;
        };
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&zd, &dz_a));
        let mu_aff = (&s + &ds_a * alpha_aff).dot(&(&zd + &dz_a * alpha_aff)) / m as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let rc = DVector::from_element(m, sigma * mu) - s.component_mul(&zd) - ds_a.component_mul(&dz_a);
        let Some((dx, dnu, ds, dz)) = solve(&rc) else {
            break;
        };
        let alpha = (0.99 * max_step(&s, &ds).min(max_step(&zd, &dz))).min(1.0);
        x += &dx * alpha;
        nu += &dnu * alpha;
        s += &ds * alpha;
        zd += &dz * alpha;
        s.apply(|v| *v = v.max(1e-300));
        zd.apply(|v| *v = v.max(1e-300));
    }
    best.map(|(_, p)| p).ok_or(QpError::NotConverged(f64::INFINITY))
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(1.0, f64::min)
}

/// Re-solves the equality-constrained QP on the active set guessed from
/// the interior-point iterate.
fn polish(data: &QpData, pt: &KktPoint) -> Option<KktPoint> {
    let n = data.n;
    let nx = 2 * n;
    let slack = &data.hv - &data.gm * &pt.x;
    let oscale = data.objective_scale();
    let pscale = data.primal_scale();

    let mut active: Vec<usize> = Vec::new();
    for i in 0..n {
        let mut rows: Vec<usize> = (4 * i..4 * i + 4)
            .filter(|&k| slack[k] / pscale < pt.zd[k] / oscale)
            .collect();
        rows.sort_by(|&a, &b| pt.zd[b].total_cmp(&pt.zd[a]));
        // Keep at most two independent rows per unit; rows only touch (y_i, p_i).
        let mut kept: Vec<(f64, f64)> = Vec::new();
        for k in rows {
            let v = (data.gm[(k, i)], data.gm[(k, n + i)]);
            let independent = match kept.as_slice() {
                [] => true,
                [u] => (u.0 * v.1 - u.1 * v.0).abs() > 1e-12 * (1.0 + v.0.abs() + u.0.abs()),
                _ => false,
            };
            if independent {
                kept.push(v);
                active.push(k);
            }
        }
    }

    let na = active.len();
    let dim = nx + 1 + na;
    let mut k = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for j in 0..nx {
        k[(j, j)] = data.h_diag[j];
        rhs[j] = -data.g[j];
        k[(nx, j)] = data.a[(0, j)];
        k[(j, nx)] = data.a[(0, j)];
    }
    rhs[nx] = data.b[0];
    for (row, &c) in active.iter().enumerate() {
        for j in 0..nx {
            k[(nx + 1 + row, j)] = data.gm[(c, j)];
            k[(j, nx + 1 + row)] = data.gm[(c, j)];
        }
        rhs[nx + 1 + row] = data.hv[c];
    }
    let sol = k.clone().lu().solve(&rhs).or_else(|| k.svd(true, true).solve(&rhs, 1e-14).ok())?;

    let x = sol.rows(0, nx).into_owned();
    let nu = sol.rows(nx, 1).into_owned();
    let mut zd = DVector::zeros(data.hv.len());
    for (row, &c) in active.iter().enumerate() {
        let v = sol[nx + 1 + row];
        if v < -1e-12 * oscale {
            return None;
        }
        zd[c] = v.max(0.0);
    }
    let viol = (&data.gm * &x - &data.hv).max();
    if viol > 1e-12 * pscale {
        return None;
    }
    Some(KktPoint { x, nu, zd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_generators, GeneratorParams};

    fn table1(load: f64) -> UCInstance {
        let units = parse_generators(include_str!("../../../data/table1.csv").as_bytes()).unwrap();
        UCInstance::new(units, load).unwrap()
    }

    fn zeros(n: usize) -> Vec<f64> {
        vec![0.0; n]
    }

    #[test]
    fn overload_is_infeasible() {
        let inst = table1(2000.0);
        let z = zeros(10);
        let prob = Block1Problem { instance: &inst, z: &z, r: &z, lambda: &z, rho: 4000.0, beta: 1000.0 };
        assert!(matches!(
            solve_block1(&prob, DEFAULT_TOLERANCE),
            Err(QpError::InfeasibleRelaxation { capacity, .. }) if capacity == 1662.0
        ));
    }

    #[test]
    fn zero_load_stays_at_origin() {
        let inst = table1(0.0);
        let z = zeros(10);
        let prob = Block1Problem { instance: &inst, z: &z, r: &z, lambda: &z, rho: 4000.0, beta: 1000.0 };
        let sol = solve_block1(&prob, DEFAULT_TOLERANCE).unwrap();
        assert!(sol.y.iter().chain(&sol.p).all(|v| v.abs() < 1e-9));
        assert!(sol.objective.abs() < 1e-6);
        assert!(sol.kkt_residual <= DEFAULT_TOLERANCE);
    }

    #[test]
    fn single_unit_follows_penalty() {
        let unit = table1(0.0).generators()[0].clone();
        let inst = UCInstance::new(vec![unit], 30.0).unwrap();
        let (z, r, l) = ([1.0], [0.0], [0.0]);
        let prob = Block1Problem { instance: &inst, z: &z, r: &r, lambda: &l, rho: 1e6, beta: 0.0 };
        let sol = solve_block1(&prob, DEFAULT_TOLERANCE).unwrap();
        // Grid oracle: p is pinned to the load; y in [30/55, 1] minimizes
        // 660 y + 1e6/2 (y - 1)^2, i.e. y = 1 - 660/1e6.
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=1000 {
            let y = k as f64 * 1e-3;
            if 10.0 * y > 30.0 || 55.0 * y < 30.0 {
                continue;
            }
            let v = block1_objective(&prob, &[y], &[30.0]).unwrap();
            if v < best.0 {
                best = (v, y);
            }
        }
        assert!((sol.p[0] - 30.0).abs() < 1e-9);
        assert!((sol.y[0] - best.1).abs() <= 1e-3);
        assert!((sol.y[0] - (1.0 - 660.0 / 1e6)).abs() < 1e-9);
    }

    #[test]
    fn objective_examples() {
        let inst = UCInstance::new(
            vec![GeneratorParams { id: 1, a: 1.0, b: 0.0, c: 0.0, p_min: 0.0, p_max: 1.0 }],
            0.0,
        )
        .unwrap();
        let zero = [0.0];
        let prob = Block1Problem { instance: &inst, z: &zero, r: &zero, lambda: &zero, rho: 2.0, beta: 0.0 };
        assert_eq!(block1_objective(&prob, &[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(block1_objective(&prob, &[1.0], &[0.0]).unwrap(), 2.0);

        let one = [1.0];
        let lam = [5.0];
        let prob = Block1Problem { instance: &inst, z: &one, r: &zero, lambda: &lam, rho: 123.0, beta: 0.0 };
        assert_eq!(block1_objective(&prob, &[1.0], &[0.0]).unwrap(), 1.0);
        assert!(matches!(
            block1_objective(&prob, &[1.0, 0.0], &[0.0]),
            Err(QpError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_parameters() {
        let inst = table1(100.0);
        let z = zeros(10);
        let prob = Block1Problem { instance: &inst, z: &z, r: &z, lambda: &z, rho: 0.0, beta: 0.0 };
        assert_eq!(solve_block1(&prob, 1e-9), Err(QpError::InvalidPenalty(0.0)));
        let prob = Block1Problem { rho: 1.0, ..prob };
        assert_eq!(solve_block1(&prob, 1e-13), Err(QpError::InvalidTolerance(1e-13)));
        let short = zeros(3);
        let prob = Block1Problem { z: &short, ..prob };
        assert!(matches!(solve_block1(&prob, 1e-9), Err(QpError::LengthMismatch { .. })));
    }

    #[test]
    fn table1_loads_meet_kkt_tolerance() {
        for load in [0.0, 50.0, 100.0, 400.0, 800.0, 1000.0, 1662.0] {
            let inst = table1(load);
            for (z, rho) in [(0.0, 4000.0), (1.0, 4000.0), (1.0, 1e6 + 1.0)] {
                let zv = vec![z; 10];
                let r = zeros(10);
                let prob = Block1Problem { instance: &inst, z: &zv, r: &r, lambda: &r, rho, beta: 1000.0 };
                let sol = solve_block1(&prob, DEFAULT_TOLERANCE).unwrap();
                assert!(sol.kkt_residual <= DEFAULT_TOLERANCE, "load {load} z {z}: {}", sol.kkt_residual);
                assert!((sol.p.iter().sum::<f64>() - load).abs() < 1e-7);
            }
        }
    }
}

//! Dense statevector simulation of QAOA for diagonal QUBOs.
//!
//! Qubit `i` carries variable `i` (unit `i + 1`) and is bit `i` of the
//! basis index, so basis index `0b1011` over four qubits is units 1, 2 and
//! 4 on. The cost layer multiplies each amplitude by
//! `exp(i pi gamma E(x) / 2)` and the mixer applies
//! `exp(i pi beta X / 2)` to every qubit. Depth `P` alternates the two,
//! cost first, starting from the uniform superposition.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::qubo::{index_bits, QuboProblem};

pub const MAX_QUBITS: usize = 16;

/// Probabilities closer than this are treated as tied during extraction.
const PROBABILITY_TIE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QaoaError {
    #[error("{0} qubits exceeds simulator limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("at least one qubit is required")]
    NoQubits,
    #[error("state has {state} qubits but problem has {problem}")]
    DimensionMismatch { state: usize, problem: usize },
    #[error("parameter vectors must both have length {depth}, got {gammas} and {betas}")]
    ParamLength { depth: usize, gammas: usize, betas: usize },
    #[error("depth and budget must be at least 1")]
    InvalidConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    amplitudes: Vec<Complex64>,
    n: usize,
}

impl Statevector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Computational basis state `|x⟩`.
    pub fn basis(n: usize, x: usize) -> Result<Self, QaoaError> {
        check_qubits(n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[x] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, n })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QaoaError> {
        let n = amplitudes.len().trailing_zeros() as usize;
        if amplitudes.len() != 1 << n {
            return Err(QaoaError::DimensionMismatch {
                state: amplitudes.len(),
                problem: 1 << n,
            });
        }
        check_qubits(n)?;
        Ok(Self { amplitudes, n })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn check_qubits(n: usize) -> Result<(), QaoaError> {
    match n {
        0 => Err(QaoaError::NoQubits),
        n if n > MAX_QUBITS => Err(QaoaError::TooManyQubits(n)),
        _ => Ok(()),
    }
}

/// Uniform superposition `H^{⊗n}|0⟩`.
pub fn init_uniform(n: usize) -> Result<Statevector, QaoaError> {
    check_qubits(n)?;
    let amp = (0.5f64).powf(n as f64 / 2.0);
    Ok(Statevector {
        amplitudes: vec![Complex64::new(amp, 0.0); 1 << n],
        n,
    })
}

/// Diagonal of the cost operator: QUBO energies with the constant dropped,
/// optionally divided by `max_i |q_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDiagonal {
    values: Vec<f64>,
    n: usize,
    scale: f64,
}

impl CostDiagonal {
    pub fn new(qubo: &QuboProblem, normalize: bool) -> Result<Self, QaoaError> {
        let n = qubo.n();
        check_qubits(n)?;
        let max = qubo
            .linear
            .iter()
            .chain(qubo.couplings.values())
            .fold(0.0f64, |m, q| m.max(q.abs()));
        let scale = if normalize && max > 0.0 { max } else { 1.0 };
        let values = (0..1usize << n)
            .map(|x| qubo.variable_energy(&index_bits(x, n)) / scale)
            .collect();
        Ok(Self { values, n, scale })
    }

    /// Unscaled energies, constant dropped.
    pub fn raw(qubo: &QuboProblem) -> Result<Self, QaoaError> {
        Self::new(qubo, false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Divisor applied to the energies.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

pub fn apply_cost_layer(state: &mut Statevector, cost: &CostDiagonal, gamma: f64) -> Result<(), QaoaError> {
    if state.n != cost.n {
        return Err(QaoaError::DimensionMismatch {
            state: state.n,
            problem: cost.n,
        });
    }
    for (amp, &e) in state.amplitudes.iter_mut().zip(&cost.values) {
        *amp *= Complex64::from_polar(1.0, PI * gamma * e / 2.0);
    }
    Ok(())
}

/// `exp(i pi beta X / 2) = cos(pi beta / 2) I + i sin(pi beta / 2) X` on every qubit.
pub fn apply_mixer_layer(state: &mut Statevector, beta: f64) {
    let theta = PI * beta / 2.0;
    let c = Complex64::new(theta.cos(), 0.0);
    let s = Complex64::new(0.0, theta.sin());
    let dim = state.amplitudes.len();
    for q in 0..state.n {
        let stride = 1 << q;
        for base in (0..dim).step_by(stride << 1) {
            for i in base..base + stride {
                let j = i + stride;
                let a0 = state.amplitudes[i];
                let a1 = state.amplitudes[j];
                state.amplitudes[i] = c * a0 + s * a1;
                state.amplitudes[j] = s * a0 + c * a1;
            }
        }
    }
}

/// Variational angles, one `(gamma, beta)` pair per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    /// Every angle set to `value`.
    pub fn constant(depth: usize, value: f64) -> Self {
        Self {
            gammas: vec![value; depth],
            betas: vec![value; depth],
        }
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    fn check(&self, depth: usize) -> Result<(), QaoaError> {
        if depth == 0 || self.gammas.len() != depth || self.betas.len() != depth {
            return Err(QaoaError::ParamLength {
                depth,
                gammas: self.gammas.len(),
                betas: self.betas.len(),
            });
        }
        Ok(())
    }

    fn to_vec(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    fn from_slice(v: &[f64]) -> Self {
        let p = v.len() / 2;
        Self {
            gammas: v[..p].to_vec(),
            betas: v[p..].to_vec(),
        }
    }
}

pub fn run_circuit(cost: &CostDiagonal, params: &QaoaParams) -> Result<Statevector, QaoaError> {
    params.check(params.depth())?;
    let mut state = init_uniform(cost.n)?;
    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        apply_cost_layer(&mut state, cost, gamma)?;
        apply_mixer_layer(&mut state, beta);
    }
    Ok(state)
}

/// `⟨ψ|C|ψ⟩` in original QUBO units, constant included.
pub fn expectation(state: &Statevector, qubo: &QuboProblem) -> Result<f64, QaoaError> {
    if state.n != qubo.n() {
        return Err(QaoaError::DimensionMismatch {
            state: state.n,
            problem: qubo.n(),
        });
    }
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(x, a)| a.norm_sqr() * qubo.energy_of_index(x))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extraction {
    /// Most probable basis state, lowest index on ties.
    Argmax,
    /// One seeded draw from the output distribution.
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaoaConfig {
    pub depth: usize,
    /// Maximum number of expectation evaluations.
    pub optimizer_budget: usize,
    /// Cold-start angles.
    pub initial_params: QaoaParams,
    pub extraction: Extraction,
    pub sample_seed: u64,
    pub normalize_scale: bool,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self::with_depth(2)
    }
}

impl QaoaConfig {
    pub fn with_depth(depth: usize) -> Self {
        Self {
            depth,
            optimizer_budget: 100,
            initial_params: QaoaParams::constant(depth, 0.1),
            extraction: Extraction::Argmax,
            sample_seed: 0,
            normalize_scale: true,
        }
    }

    pub fn validate(&self) -> Result<(), QaoaError> {
        if self.depth == 0 || self.optimizer_budget == 0 {
            return Err(QaoaError::InvalidConfig);
        }
        self.initial_params.check(self.depth)
    }
}

/// Simplex step used to seed Nelder-Mead around the starting angles.
const SIMPLEX_STEP: f64 = 0.25;

/// Nelder-Mead over `(gammas, betas)` minimizing the expectation, capped at
/// `optimizer_budget` evaluations. Returns the best point seen.
pub fn optimize_params(
    qubo: &QuboProblem,
    config: &QaoaConfig,
    start: &QaoaParams,
) -> Result<(QaoaParams, f64), QaoaError> {
    config.validate()?;
    start.check(config.depth)?;
    let cost = CostDiagonal::new(qubo, config.normalize_scale)?;
    let mut best: (Vec<f64>, f64) = (start.to_vec(), f64::INFINITY);
    let mut f = |v: &[f64]| -> Result<f64, QaoaError> {
        let state = run_circuit(&cost, &QaoaParams::from_slice(v))?;
        let value = expectation(&state, qubo)?;
        if value < best.1 {
            best = (v.to_vec(), value);
        }
        Ok(value)
    };
    nelder_mead(&mut f, &start.to_vec(), config.optimizer_budget)?;
    Ok((QaoaParams::from_slice(&best.0), best.1))
}

fn nelder_mead<F>(f: &mut F, x0: &[f64], budget: usize) -> Result<(), QaoaError>
where
    F: FnMut(&[f64]) -> Result<f64, QaoaError>,
{
    let dim = x0.len();
    let mut used = 0usize;
    let mut eval = |x: &[f64], used: &mut usize| -> Result<Option<f64>, QaoaError> {
        if *used >= budget {
            return Ok(None);
        }
        *used += 1;
        f(x).map(Some)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let Some(f0) = eval(x0, &mut used)? else {
        return Ok(());
    };
    simplex.push((x0.to_vec(), f0));
    for k in 0..dim {
        let mut x = x0.to_vec();
        x[k] += SIMPLEX_STEP;
        let Some(fx) = eval(&x, &mut used)? else {
            return Ok(());
        };
        simplex.push((x, fx));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[dim].clone();
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let Some(fr) = eval(&xr, &mut used)? else {
            return Ok(());
        };
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let Some(fe) = eval(&xe, &mut used)? else {
                return Ok(());
            };
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc_target) = if fr < worst.1 { (along(0.5), fr) } else { (along(-0.5), worst.1) };
        let Some(fc) = eval(&xc, &mut used)? else {
            return Ok(());
        };
        if fc < fc_target {
            simplex[dim] = (xc, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            let Some(fx) = eval(&x, &mut used)? else {
                return Ok(());
            };
            *vertex = (x, fx);
        }
    }
}

/// Reads a bitstring off the final state.
pub fn extract_solution(state: &Statevector, config: &QaoaConfig) -> Vec<bool> {
    let probs = state.probabilities();
    let index = match config.extraction {
        Extraction::Argmax => {
            let mut best = 0usize;
            for (x, &p) in probs.iter().enumerate().skip(1) {
                if p > probs[best] + PROBABILITY_TIE {
                    best = x;
                }
            }
            best
        }
        Extraction::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.sample_seed);
            let total: f64 = probs.iter().sum();
            let draw = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            probs
                .iter()
                .position(|&p| {
                    acc += p;
                    draw < acc
                })
                .unwrap_or(probs.len() - 1)
        }
    };
    index_bits(index, state.n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaoaOutcome {
    pub bits: Vec<bool>,
    pub params: QaoaParams,
    /// Expectation at `params`, constant included.
    pub expectation: f64,
    /// Probability of each basis index.
    pub probabilities: Vec<f64>,
}

impl QaoaOutcome {
    pub fn probability_of(&self, bits: &[bool]) -> f64 {
        let x = bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | (usize::from(b) << i));
        self.probabilities[x]
    }
}

/// Optimizes the angles (starting from `warm` when given), then reads out
/// the final state.
pub fn solve_qubo_qaoa(
    qubo: &QuboProblem,
    config: &QaoaConfig,
    warm: Option<&QaoaParams>,
) -> Result<QaoaOutcome, QaoaError> {
    check_qubits(qubo.n())?;
    let start = warm.unwrap_or(&config.initial_params);
    let (params, value) = optimize_params(qubo, config, start)?;
    let cost = CostDiagonal::new(qubo, config.normalize_scale)?;
    let state = run_circuit(&cost, &params)?;
    Ok(QaoaOutcome {
        bits: extract_solution(&state, config),
        params,
        expectation: value,
        probabilities: state.probabilities(),
    })
}

/// Renders basis index `x` highest qubit first.
pub fn ket_label(x: usize, n: usize) -> String {
    (0..n).rev().map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect()
}

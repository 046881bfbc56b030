//! Second ADMM block: the binary subproblem over `z`.
//!
//! With `y`, `r`, `lambda` fixed, the `z`-dependent part of the augmented
//! Lagrangian is `sum_i -lambda_i z_i + rho/2 (a_i - z_i)^2` with
//! `a_i = y_i + r_i`. Because `z_i^2 = z_i` on binaries, it collapses to a
//! QUBO with only linear terms.

use std::collections::BTreeMap;

use thiserror::Error;

/// Largest variable count accepted by the exhaustive solver.
pub const MAX_EXACT_VARIABLES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuboError {
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("penalty rho must be positive, got {0}")]
    InvalidPenalty(f64),
    #[error("{n} variables exceeds exhaustive limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("QUBO has {0} pairwise couplings; per-bit solver requires none")]
    HasCouplings(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    pub linear: Vec<f64>,
    pub constant: f64,
    /// Pairwise terms `q_ij z_i z_j` keyed by `(i, j)` with `i < j`.
    /// Always empty for problems built from the ADMM.
    pub couplings: BTreeMap<(usize, usize), f64>,
}

impl QuboProblem {
    pub fn new(linear: Vec<f64>, constant: f64) -> Self {
        Self {
            linear,
            constant,
            couplings: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    /// Energy without the constant offset.
    pub fn variable_energy(&self, bits: &[bool]) -> f64 {
        let mut e = 0.0;
        for (q, &b) in self.linear.iter().zip(bits) {
            if b {
                e += q;
            }
        }
        for (&(i, j), q) in &self.couplings {
            if bits[i] && bits[j] {
                e += q;
            }
        }
        e
    }

    pub fn energy(&self, bits: &[bool]) -> f64 {
        self.variable_energy(bits) + self.constant
    }

    /// Energy of basis index `x`, bit `i` of `x` being variable `i`.
    pub fn energy_of_index(&self, x: usize) -> f64 {
        self.energy(&index_bits(x, self.n()))
    }
}

pub(crate) fn index_bits(x: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| x >> i & 1 == 1).collect()
}

/// `sum_i h_i s_i + offset` over spins `s in {-1, +1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    pub h: Vec<f64>,
    pub offset: f64,
}

impl IsingProblem {
    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        self.h
            .iter()
            .zip(spins)
            .map(|(h, &s)| h * f64::from(s))
            .sum::<f64>()
            + self.offset
    }
}

/// Builds the `z`-block QUBO from the current iterate.
///
/// `q_i = -lambda_i + rho (1/2 - a_i)` and
/// `constant = sum_i lambda_i a_i + rho/2 a_i^2`, where `a_i = y_i + r_i`.
pub fn build_qubo(y: &[f64], r: &[f64], lambda: &[f64], rho: f64) -> Result<QuboProblem, QuboError> {
    let n = y.len();
    for len in [r.len(), lambda.len()] {
        if len != n {
            return Err(QuboError::LengthMismatch { expected: n, actual: len });
        }
    }
    if !(rho > 0.0) {
        return Err(QuboError::InvalidPenalty(rho));
    }
    let mut linear = Vec::with_capacity(n);
    let mut constant = 0.0;
    for i in 0..n {
        let a = y[i] + r[i];
        linear.push(-lambda[i] + rho * (0.5 - a));
        constant += lambda[i] * a + 0.5 * rho * a * a;
    }
    Ok(QuboProblem::new(linear, constant))
}

/// Substitutes `z = (s + 1) / 2`.
pub fn to_spin(qubo: &QuboProblem) -> IsingProblem {
    assert!(qubo.couplings.is_empty(), "coupled QUBOs have no linear-only Ising form here");
    let h: Vec<f64> = qubo.linear.iter().map(|q| 0.5 * q).collect();
    let offset = qubo.constant + h.iter().sum::<f64>();
    IsingProblem { h, offset }
}

/// Exhaustive minimization. Among equal energies the assignment that is
/// lexicographically smallest in `(z_1, ..., z_n)` wins.
pub fn solve_qubo_exact(qubo: &QuboProblem) -> Result<(Vec<bool>, f64), QuboError> {
    let n = qubo.n();
    if n > MAX_EXACT_VARIABLES {
        return Err(QuboError::TooLarge {
            n,
            limit: MAX_EXACT_VARIABLES,
        });
    }
    let mut best_bits = vec![false; n];
    let mut best = qubo.energy(&best_bits);
    let mut bits = vec![false; n];
    // Counter order: variable 1 is the most significant digit.
    for k in 1u64..(1u64 << n) {
        for (i, b) in bits.iter_mut().enumerate() {
            *b = k >> (n - 1 - i) & 1 == 1;
        }
        let e = qubo.energy(&bits);
        if e < best {
            best = e;
            best_bits.copy_from_slice(&bits);
        }
    }
    Ok((best_bits, best))
}

/// Sets each bit independently: `z_i = 1` iff `q_i < 0`.
pub fn solve_qubo_perbit(qubo: &QuboProblem) -> Result<(Vec<bool>, f64), QuboError> {
    if !qubo.couplings.is_empty() {
        return Err(QuboError::HasCouplings(qubo.couplings.len()));
    }
    let bits: Vec<bool> = qubo.linear.iter().map(|&q| q < 0.0).collect();
    let energy = qubo.energy(&bits);
    Ok((bits, energy))
}

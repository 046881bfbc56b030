//! Single-period unit commitment data model.
//!
//! A unit `i` that is committed (`y_i = 1`) costs `a_i + b_i p_i + c_i p_i^2`
//! and must produce `p_min <= p_i <= p_max`; an uncommitted unit produces
//! nothing. Total output must equal the load. This module holds the data,
//! cost and feasibility checks, the economic dispatch kernel used for a
//! fixed commitment, and an exhaustive enumeration oracle.

use std::fmt;
use std::io::Read;

use rayon::prelude::*;
use thiserror::Error;

/// Largest unit count accepted by [`enumerate_uc`].
pub const MAX_ENUMERATION_UNITS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: malformed row `{content}`: {reason}")]
    MalformedRow {
        line: usize,
        content: String,
        reason: String,
    },
    #[error("missing or wrong header, expected `id,a,b,c,p_min,p_max`, found `{0}`")]
    BadHeader(String),
    #[error("unit {id}: {reason}")]
    InvariantViolation { id: usize, reason: String },
    #[error("duplicate unit id {0}")]
    DuplicateId(usize),
    #[error("unit ids must be 1..={n} without gaps, missing {missing}")]
    NonContiguousIds { n: usize, missing: usize },
    #[error("no generating units")]
    Empty,
    #[error("load must be finite and nonnegative, got {0}")]
    InvalidLoad(f64),
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("commitment cannot serve load {load} MW (committed range [{min}, {max}] MW)")]
    InfeasibleCommitment { load: f64, min: f64, max: f64 },
    #[error("no commitment can serve load {0} MW")]
    Infeasible(f64),
    #[error("{n} units exceeds enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Cost and limit data of one generating unit.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    /// 1-based unit index.
    pub id: usize,
    /// Fixed cost incurred when committed ($).
    pub a: f64,
    /// Linear cost coefficient ($/MW).
    pub b: f64,
    /// Quadratic cost coefficient ($/MW^2).
    pub c: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.c, self.p_min, self.p_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(self.violation("coefficients must be finite"));
        }
        if self.p_min < 0.0 {
            return Err(self.violation("p_min must be nonnegative"));
        }
        if self.p_min > self.p_max {
            return Err(self.violation(format!(
                "p_min {} exceeds p_max {}",
                self.p_min, self.p_max
            )));
        }
        if self.c < 0.0 {
            return Err(self.violation(format!("quadratic coefficient {} is negative", self.c)));
        }
        Ok(())
    }

    fn violation(&self, reason: impl Into<String>) -> ModelError {
        ModelError::InvariantViolation {
            id: self.id,
            reason: reason.into(),
        }
    }

    /// Operating cost `a + b p + c p^2` of a committed unit.
    pub fn running_cost(&self, p: f64) -> f64 {
        self.a + self.b * p + self.c * p * p
    }

    /// Marginal cost `b + 2 c p`.
    pub fn marginal_cost(&self, p: f64) -> f64 {
        self.b + 2.0 * self.c * p
    }
}

/// Generator fleet plus system load. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct UCInstance {
    generators: Vec<GeneratorParams>,
    load: f64,
}

impl UCInstance {
    /// Builds an instance, sorting units by id and checking every invariant.
    pub fn new(mut generators: Vec<GeneratorParams>, load: f64) -> Result<Self> {
        if generators.is_empty() {
            return Err(ModelError::Empty);
        }
        if !load.is_finite() || load < 0.0 {
            return Err(ModelError::InvalidLoad(load));
        }
        for g in &generators {
            g.validate()?;
        }
        generators.sort_by_key(|g| g.id);
        for pair in generators.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(ModelError::DuplicateId(pair[0].id));
            }
        }
        let n = generators.len();
        if let Some(missing) = (1..=n).find(|&id| generators[id - 1].id != id) {
            return Err(ModelError::NonContiguousIds { n, missing });
        }
        Ok(Self { generators, load })
    }

    pub fn generators(&self) -> &[GeneratorParams] {
        &self.generators
    }

    pub fn load(&self) -> f64 {
        self.load
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Same fleet at a different load.
    pub fn with_load(&self, load: f64) -> Result<Self> {
        Self::new(self.generators.clone(), load)
    }

    /// The first `n` units at the given load.
    pub fn prefix(&self, n: usize, load: f64) -> Result<Self> {
        Self::new(self.generators.iter().take(n).cloned().collect(), load)
    }

    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max).sum()
    }

    fn check_len(&self, actual: usize) -> Result<()> {
        if actual != self.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.len(),
                actual,
            });
        }
        Ok(())
    }
}

/// On/off status per unit; `bits[i]` belongs to unit `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Commitment {
    bits: Vec<bool>,
}

impl Commitment {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn all_off(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn all_on(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    /// From a 0/1 sequence; any other value is rejected.
    pub fn from_binary(values: &[f64]) -> Option<Self> {
        values
            .iter()
            .map(|&v| match v {
                0.0 => Some(false),
                1.0 => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self::new)
    }

    /// Bit `i` of `mask` is unit `i + 1`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self::new((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    /// Commitment with exactly the listed 1-based units on.
    pub fn from_units(n: usize, on: &[usize]) -> Self {
        let mut bits = vec![false; n];
        for &u in on {
            bits[u - 1] = true;
        }
        Self::new(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_on(&self, unit_index: usize) -> bool {
        self.bits[unit_index]
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// 1-based ids of committed units.
    pub fn on_units(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i + 1))
            .collect()
    }

    /// Renders highest unit first, e.g. `1011` for units 1, 2, 4 on out of 4.
    pub fn ket(&self) -> String {
        self.bits
            .iter()
            .rev()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⟩", self.ket())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UCSolution {
    pub commitment: Commitment,
    pub dispatch: Vec<f64>,
    pub cost: f64,
}

/// Reads generator rows with header `id,a,b,c,p_min,p_max`.
pub fn parse_generators<R: Read>(reader: R) -> Result<Vec<GeneratorParams>> {
    const HEADER: [&str; 6] = ["id", "a", "b", "c", "p_min", "p_max"];

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| ModelError::Csv(e.to_string()))?
        .clone();
    if header.len() != HEADER.len() || header.iter().zip(HEADER).any(|(h, e)| h != e) {
        return Err(ModelError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
    }

    let mut units: Vec<GeneratorParams> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| ModelError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let content = record.iter().collect::<Vec<_>>().join(",");
        let malformed = |reason: String| ModelError::MalformedRow {
            line,
            content: content.clone(),
            reason,
        };
        if record.len() != HEADER.len() {
            return Err(malformed(format!(
                "expected {} columns, found {}",
                HEADER.len(),
                record.len()
            )));
        }
        let id: usize = record[0]
            .parse()
            .map_err(|_| malformed(format!("unit id `{}` is not a positive integer", &record[0])))?;
        if id == 0 {
            return Err(malformed("unit ids start at 1".into()));
        }
        let mut values = [0.0; 5];
        for (k, v) in values.iter_mut().enumerate() {
            let field = &record[k + 1];
            *v = field
                .parse()
                .map_err(|_| malformed(format!("column `{}` value `{field}` is not a number", HEADER[k + 1])))?;
        }
        let unit = GeneratorParams {
            id,
            a: values[0],
            b: values[1],
            c: values[2],
            p_min: values[3],
            p_max: values[4],
        };
        unit.validate()?;
        if units.iter().any(|u| u.id == id) {
            return Err(ModelError::DuplicateId(id));
        }
        units.push(unit);
    }
    if units.is_empty() {
        return Err(ModelError::Empty);
    }
    units.sort_by_key(|u| u.id);
    Ok(units)
}

/// Total cost `sum_i a_i y_i + b_i p_i + c_i p_i^2`.
pub fn evaluate_cost(instance: &UCInstance, commitment: &Commitment, dispatch: &[f64]) -> Result<f64> {
    instance.check_len(commitment.len())?;
    instance.check_len(dispatch.len())?;
    Ok(instance
        .generators()
        .iter()
        .zip(commitment.bits())
        .zip(dispatch)
        .map(|((g, &on), &p)| {
            let fixed = if on { g.a } else { 0.0 };
            fixed + g.b * p + g.c * p * p
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `sum p - load`.
    Balance { slack: f64 },
    /// `p_min y - p > tol`.
    BelowMinimum { unit: usize, slack: f64 },
    /// `p - p_max y > tol`.
    AboveMaximum { unit: usize, slack: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible,
    Violations(Vec<Violation>),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

pub fn check_feasible(
    instance: &UCInstance,
    commitment: &Commitment,
    dispatch: &[f64],
    tol: f64,
) -> Result<Feasibility> {
    instance.check_len(commitment.len())?;
    instance.check_len(dispatch.len())?;
    let mut violations = Vec::new();
    let total: f64 = dispatch.iter().sum();
    let balance = total - instance.load();
    if balance.abs() > tol {
        violations.push(Violation::Balance { slack: balance });
    }
    for ((g, &on), &p) in instance.generators().iter().zip(commitment.bits()).zip(dispatch) {
        let y = if on { 1.0 } else { 0.0 };
        let below = g.p_min * y - p;
        if below > tol {
            violations.push(Violation::BelowMinimum { unit: g.id, slack: below });
        }
        let above = p - g.p_max * y;
        if above > tol {
            violations.push(Violation::AboveMaximum { unit: g.id, slack: above });
        }
    }
    Ok(if violations.is_empty() {
        Feasibility::Feasible
    } else {
        Feasibility::Violations(violations)
    })
}

/// Least-cost allocation of the load over committed units.
///
/// Finds the marginal price `mu` at which clamped outputs
/// `clamp((mu - b) / 2c, p_min, p_max)` sum to the load. Units with `c = 0`
/// jump from `p_min` to `p_max` at `mu = b` and take whatever is left at the
/// clearing price, lowest index first.
pub fn economic_dispatch(instance: &UCInstance, commitment: &Commitment) -> Result<Vec<f64>> {
    instance.check_len(commitment.len())?;
    let load = instance.load();
    let on: Vec<&GeneratorParams> = instance
        .generators()
        .iter()
        .zip(commitment.bits())
        .filter_map(|(g, &b)| b.then_some(g))
        .collect();
    let min: f64 = on.iter().map(|g| g.p_min).sum();
    let max: f64 = on.iter().map(|g| g.p_max).sum();
    let slack = 1e-9 * load.max(1.0);
    if load < min - slack || load > max + slack {
        return Err(ModelError::InfeasibleCommitment { load, min, max });
    }

    let mut dispatch = vec![0.0; instance.len()];
    if on.is_empty() {
        return Ok(dispatch);
    }
    let alloc: Vec<f64> = if load >= max {
        on.iter().map(|g| g.p_max).collect()
    } else if load <= min {
        on.iter().map(|g| g.p_min).collect()
    } else {
        dispatch_committed(&on, load)
    };
    for (g, p) in on.iter().zip(alloc) {
        dispatch[g.id - 1] = p;
    }
    Ok(dispatch)
}

fn dispatch_committed(units: &[&GeneratorParams], load: f64) -> Vec<f64> {
    let output = |g: &GeneratorParams, mu: f64| -> f64 {
        if g.c > 0.0 {
            ((mu - g.b) / (2.0 * g.c)).clamp(g.p_min, g.p_max)
        } else if mu > g.b {
            g.p_max
        } else {
            g.p_min
        }
    };
    let total = |mu: f64| units.iter().map(|g| output(g, mu)).sum::<f64>();

    let mut lo = units
        .iter()
        .map(|g| g.marginal_cost(g.p_min))
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let mut hi = units
        .iter()
        .map(|g| g.marginal_cost(g.p_max))
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    // total(lo) = sum p_min <= load <= sum p_max = total(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) < load {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Clamp pattern from the bracket, then solve the clearing price exactly
    // over units that sit strictly inside their limits.
    let mut p: Vec<f64> = units.iter().map(|g| output(g, hi)).collect();
    let interior: Vec<usize> = (0..units.len())
        .filter(|&k| {
            let g = units[k];
            g.c > 0.0 && {
                let raw_lo = (lo - g.b) / (2.0 * g.c);
                let raw_hi = (hi - g.b) / (2.0 * g.c);
                raw_hi > g.p_min && raw_lo < g.p_max
            }
        })
        .collect();
    let step_units: Vec<usize> = (0..units.len())
        .filter(|&k| units[k].c == 0.0 && units[k].b >= lo && units[k].b <= hi)
        .collect();

    if !interior.is_empty() && step_units.is_empty() {
        let fixed: f64 = (0..units.len())
            .filter(|k| !interior.contains(k))
            .map(|k| p[k])
            .sum();
        let inv: f64 = interior.iter().map(|&k| 1.0 / (2.0 * units[k].c)).sum();
        let offset: f64 = interior.iter().map(|&k| units[k].b / (2.0 * units[k].c)).sum();
        let mu = (load - fixed + offset) / inv;
        for &k in &interior {
            p[k] = output(units[k], mu);
        }
    } else if !step_units.is_empty() {
        for &k in &step_units {
            p[k] = units[k].p_min;
        }
        let mut remaining = load - p.iter().sum::<f64>();
        for &k in &step_units {
            let room = units[k].p_max - units[k].p_min;
            let take = remaining.clamp(0.0, room);
            p[k] += take;
            remaining -= take;
        }
    }

    // Absorb rounding drift in whichever unit has headroom.
    let drift = load - p.iter().sum::<f64>();
    if drift != 0.0 {
        let pick = interior
            .iter()
            .chain(step_units.iter())
            .copied()
            .chain(0..units.len())
            .find(|&k| {
                let t = p[k] + drift;
                t >= units[k].p_min && t <= units[k].p_max
            });
        if let Some(k) = pick {
            p[k] += drift;
        }
    }
    p
}

/// Marginal price shared by dispatched units strictly inside their limits.
pub fn clearing_prices(instance: &UCInstance, commitment: &Commitment, dispatch: &[f64], tol: f64) -> Vec<f64> {
    instance
        .generators()
        .iter()
        .zip(commitment.bits())
        .zip(dispatch)
        .filter(|((g, &on), &p)| on && p > g.p_min + tol && p < g.p_max - tol)
        .map(|((g, _), &p)| g.marginal_cost(p))
        .collect()
}

/// Exhaustive search over all `2^N` commitments.
///
/// Among equal-cost optima the lexicographically smallest `(y_1, ..., y_N)`
/// wins.
pub fn enumerate_uc(instance: &UCInstance) -> Result<UCSolution> {
    let n = instance.len();
    if n > MAX_ENUMERATION_UNITS {
        return Err(ModelError::TooLarge {
            n,
            limit: MAX_ENUMERATION_UNITS,
        });
    }
    const CHUNK: u64 = 1 << 10;
    let total: u64 = 1 << n;
    let chunks = total.div_ceil(CHUNK);

    // Counter k enumerates commitments in lexicographic order of
    // (y_1, ..., y_N): unit 1 is the most significant bit of k.
    let to_commitment = |k: u64| -> Commitment {
        Commitment::new((0..n).map(|i| k >> (n - 1 - i) & 1 == 1).collect())
    };
    let best_in = |range: std::ops::Range<u64>| -> Option<(f64, u64, Vec<f64>)> {
        let mut best: Option<(f64, u64, Vec<f64>)> = None;
        for k in range {
            let commitment = to_commitment(k);
            let Ok(dispatch) = economic_dispatch(instance, &commitment) else {
                continue;
            };
            let cost = evaluate_cost(instance, &commitment, &dispatch).expect("lengths match");
            if best.as_ref().is_none_or(|(c, _, _)| improves(cost, *c)) {
                best = Some((cost, k, dispatch));
            }
        }
        best
    };

    let per_chunk: Vec<Option<(f64, u64, Vec<f64>)>> = (0..chunks)
        .into_par_iter()
        .map(|c| best_in(c * CHUNK..((c + 1) * CHUNK).min(total)))
        .collect();
    let best = per_chunk
        .into_iter()
        .flatten()
        .fold(None::<(f64, u64, Vec<f64>)>, |acc, cand| match acc {
            Some(a) if !improves(cand.0, a.0) => Some(a),
            _ => Some(cand),
        });

    match best {
        Some((cost, k, dispatch)) => Ok(UCSolution {
            commitment: to_commitment(k),
            dispatch,
            cost,
        }),
        None => Err(ModelError::Infeasible(instance.load())),
    }
}

// Strictly better beyond a relative tie band.
fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - 1e-12 * incumbent.abs().max(1.0)
}

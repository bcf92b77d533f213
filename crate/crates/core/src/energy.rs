// SPDX-License-Identifier: MIT OR Apache-2.0

//! Energy arrivals, the finite-capacity battery and the battery Markov chain
//! under the generalized immediate policy.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

const PMF_TOL: f64 = 1e-12;

/// pmf of the number of energy units harvested in one slot, over `{0, ..., m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalPmf {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ArrivalPmf {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidParameter("arrival pmf is empty".into()));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "arrival pmf has negative or non-finite entries: {probabilities:?}"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidParameter(format!(
                "arrival pmf sums to {total}, expected 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for p in &probabilities {
            acc += p;
            cumulative.push(acc);
        }
        Ok(Self {
            probabilities,
            cumulative,
        })
    }

    /// Unit arrival with probability `p`: the pmf `[1 - p, p]`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("bernoulli p must be in [0, 1], got {p}")));
        }
        Self::new(vec![1.0 - p, p])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `P(nu = i)`, zero beyond the support.
    pub fn prob(&self, i: usize) -> f64 {
        self.probabilities.get(i).copied().unwrap_or(0.0)
    }

    /// `P(nu >= i)`.
    pub fn tail(&self, i: usize) -> f64 {
        self.probabilities.iter().skip(i).sum()
    }

    pub fn max_arrival(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    }

    /// Support within `{0, 1}` (trailing zero-probability entries allowed).
    pub fn is_bernoulli(&self) -> bool {
        self.probabilities.iter().skip(2).all(|&p| p == 0.0)
    }

    /// Bernoulli rate when [`Self::is_bernoulli`].
    pub fn bernoulli_rate(&self) -> Option<f64> {
        self.is_bernoulli().then(|| self.prob(1))
    }
}

impl fmt::Display for ArrivalPmf {
    /// Semicolon separated so the value fits in one CSV field.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = self.bernoulli_rate() {
            return write!(f, "{p}");
        }
        let parts: Vec<String> = self.probabilities.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(";"))
    }
}

pub fn sample_arrival<R: Rng + ?Sized>(pmf: &ArrivalPmf, rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    // u < 1 always; guard against the last cumulative rounding below 1
    pmf.cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(pmf.cumulative.len() - 1) as u32
}

/// Battery with integer capacity `C` and level `E_k` in `[0, C]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryState {
    capacity: u32,
    level: u32,
}

impl BatteryState {
    pub fn new(capacity: u32, level: u32) -> Result<Self> {
        if level > capacity {
            return Err(Error::InvalidParameter(format!(
                "battery level {level} exceeds capacity {capacity}"
            )));
        }
        Ok(Self { capacity, level })
    }

    pub fn empty(capacity: u32) -> Self {
        Self { capacity, level: 0 }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Energy usable in the current slot: stored level plus the new arrival.
    pub fn available(&self, arrival: u32) -> u32 {
        self.level + arrival
    }
}

/// `E_k = min(C, E_{k-1} + nu_k - mu_k)`, rejecting a spend with nothing to
/// spend.
pub fn battery_step(state: BatteryState, arrival: u32, spend: bool) -> Result<BatteryState> {
    let available = state.available(arrival);
    if spend && available == 0 {
        return Err(Error::CausalityViolation {
            level: state.level,
            arrival,
        });
    }
    let level = (available - u32::from(spend)).min(state.capacity);
    Ok(BatteryState {
        capacity: state.capacity,
        level,
    })
}

/// Row-stochastic transition matrix of the end-of-slot battery level.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::InvalidParameter("transition matrix must be square".into()));
        }
        for (i, row) in entries.row_iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InvalidParameter(format!("row {i} has negative entries")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > PMF_TOL {
                return Err(Error::InvalidParameter(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn states(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[(from, to)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries.row(i).iter().copied().collect()
    }
}

/// Battery chain under the generalized immediate policy: the sensor samples
/// whenever stored plus arriving energy is at least one unit. Arrivals that
/// would overflow the battery are clipped into state `C`.
pub fn build_transition_matrix(pmf: &ArrivalPmf, capacity: u32) -> TransitionMatrix {
    let c = capacity as usize;
    let mut m = DMatrix::<f64>::zeros(c + 1, c + 1);
    for i in 0..=c {
        for (j, &p) in pmf.probabilities().iter().enumerate() {
            let available = i + j;
            // no sample only when nothing is available, then the level stays 0
            let next = if available == 0 { 0 } else { (available - 1).min(c) };
            m[(i, next)] += p;
        }
    }
    TransitionMatrix { entries: m }
}

/// Iteration cap for the power-iteration fallback.
pub const POWER_ITERATION_CAP: usize = 1_000_000;

/// Stationary distribution `w = w P`, `sum w = 1`.
///
/// Solves the linear system with the last balance equation replaced by the
/// normalization; falls back to power iteration from the empty state if the
/// solve is singular or produces an invalid vector. A periodic chain makes the
/// fallback fail with [`Error::NonConvergence`].
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    stationary_distribution_with_cap(matrix, POWER_ITERATION_CAP)
}

pub fn stationary_distribution_with_cap(
    matrix: &TransitionMatrix,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    if let Some(w) = direct_solve(matrix) {
        if residual(matrix, &w) < 1e-10 {
            return Ok(w);
        }
    }
    power_iteration(matrix, max_iterations)
}

fn direct_solve(matrix: &TransitionMatrix) -> Option<Vec<f64>> {
    let n = matrix.states();
    // (P^T - I) w = 0 with the last row replaced by 1^T w = 1
    let mut a = matrix.entries.transpose() - DMatrix::<f64>::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let w = a.lu().solve(&b)?;
    if w.iter().any(|&x| !x.is_finite() || x < -1e-12) {
        return None;
    }
    let w: Vec<f64> = w.iter().map(|&x| x.max(0.0)).collect();
    let s: f64 = w.iter().sum();
    Some(w.into_iter().map(|x| x / s).collect())
}

fn power_iteration(matrix: &TransitionMatrix, max_iterations: usize) -> Result<Vec<f64>> {
    let n = matrix.states();
    // start from an empty battery: for a reducible chain this picks the
    // distribution reachable from the system's initial state
    let mut w = DVector::<f64>::zeros(n);
    w[0] = 1.0;
    let pt = matrix.entries.transpose();
    let mut res = f64::INFINITY;
    for _ in 0..max_iterations {
        let next = &pt * &w;
        res = (&next - &w).amax();
        w = next;
        if res < 1e-12 {
            let s = w.sum();
            return Ok(w.iter().map(|x| x / s).collect());
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual: res,
    })
}

/// `max_j |(w P)_j - w_j|`.
pub fn residual(matrix: &TransitionMatrix, w: &[f64]) -> f64 {
    let n = matrix.states();
    (0..n)
        .map(|j| {
            let wp: f64 = (0..n).map(|i| w[i] * matrix.get(i, j)).sum();
            (wp - w[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Long-run fraction of slots in which the generalized immediate policy
/// samples: `1 - p_0 w_0`.
pub fn effective_sampling_rate(pmf: &ArrivalPmf, capacity: u32) -> Result<f64> {
    let w = stationary_distribution(&build_transition_matrix(pmf, capacity))?;
    Ok(1.0 - pmf.prob(0) * w[0])
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Threshold calibration against a false-alarm target.

use log::debug;
use rayon::prelude::*;

use super::estimate::{estimate_algorithm_arl, EstimateReport};
use super::TrialConfig;
use crate::detector::{cusum_update, page_stopped, CusumState};
use crate::error::{Error, Result};
use crate::observation::DensityPair;
use crate::seeding::trial_rng;
use crate::stats::{Accumulator, MetricEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// System-level run length `E_inf[T] >= gamma`.
    Gamma(f64),
    /// Algorithm-level run length `E_inf[N] = eta`.
    Eta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Trials per Monte Carlo evaluation inside the bisection.
    pub trials: u64,
    /// Accepted relative overshoot above the target.
    pub rel_tolerance: f64,
    pub max_log_threshold: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            rel_tolerance: 0.02,
            max_log_threshold: 50.0,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub log_threshold: f64,
    /// Run length estimated at the returned threshold (eta targets only).
    pub achieved: Option<MetricEstimate>,
    pub iterations: usize,
}

/// `E_inf[N]` by running CUSUM directly on i.i.d. pre-change samples.
///
/// For policies that ignore the statistic the non-trivial observations are
/// i.i.d. `f0` whatever the arrivals, so this equals the full-system
/// algorithm-level run length without simulating empty slots.
pub fn algorithm_arl_iid<D: DensityPair>(
    pair: &D,
    log_threshold: f64,
    trials: u64,
    seed: u64,
    max_observations: u64,
) -> Result<EstimateReport> {
    if trials < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 trials, got {trials}")));
    }
    let runs: Vec<(u64, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let mut s = CusumState::new(log_threshold);
            for n in 1..=max_observations {
                s = cusum_update(s, pair.log_likelihood_ratio(pair.sample_pre(&mut rng)));
                if page_stopped(&s) {
                    return (n, false);
                }
            }
            (max_observations, true)
        })
        .collect();
    let mut acc = Accumulator::default();
    let mut truncated = 0u64;
    for (n, t) in runs {
        acc.push(n as f64);
        truncated += u64::from(t);
    }
    let estimate = acc.estimate().expect("trials >= 2");
    Ok(EstimateReport {
        estimate,
        attempted: trials,
        truncated_fraction: truncated as f64 / trials as f64,
    })
}

/// Picks `log B` for a false-alarm target.
///
/// A `gamma` target returns `log gamma`: `E_inf[T] >= E_inf[N] >= B` for
/// Page's rule, so `B = gamma` is conservative. An `eta` target bisects on
/// `log B` until the estimated `E_inf[N]` lands in
/// `[eta, eta * (1 + rel_tolerance)]`. Every evaluation reuses the same seeds,
/// which makes the estimate monotone in `log B`.
pub fn calibrate_threshold<D: DensityPair + Clone>(
    target: Target,
    cfg: &TrialConfig<D>,
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    let value = match target {
        Target::Gamma(v) | Target::Eta(v) => v,
    };
    if !(value > 1.0) || !value.is_finite() {
        return Err(Error::InvalidParameter(format!("calibration target must be > 1, got {value}")));
    }
    let eta = match target {
        Target::Gamma(gamma) => {
            return Ok(Calibration {
                log_threshold: gamma.ln(),
                achieved: None,
                iterations: 0,
            })
        }
        Target::Eta(eta) => eta,
    };

    let evaluate = |log_b: f64| -> Result<MetricEstimate> {
        let r = if cfg.policy.is_statistic_blind() {
            algorithm_arl_iid(&cfg.pair, log_b, opts.trials, cfg.seed, cfg.max_horizon)?
        } else {
            estimate_algorithm_arl(&cfg.with_log_threshold(log_b), opts.trials)?
        };
        debug!("calibration: log_B = {log_b:.6} -> E_inf[N] = {}", r.estimate);
        Ok(r.estimate)
    };
    let upper_ok = eta * (1.0 + opts.rel_tolerance);
    let accept = |m: f64| m >= eta && m <= upper_ok;

    let mut lo = 0.0;
    let at_lo = evaluate(lo)?;
    if at_lo.mean > upper_ok {
        return Err(Error::Calibration(format!(
            "E_inf[N] is already {:.3} at log B = 0, cannot reach eta = {eta}",
            at_lo.mean
        )));
    }
    if accept(at_lo.mean) {
        return Ok(Calibration { log_threshold: lo, achieved: Some(at_lo), iterations: 1 });
    }
    let mut hi = eta.ln();
    let mut iterations = 1;
    let mut at_hi = evaluate(hi)?;
    while at_hi.mean < eta {
        hi += std::f64::consts::LN_2;
        if hi > opts.max_log_threshold {
            return Err(Error::Calibration(format!(
                "no upper bracket for eta = {eta} below log B = {}",
                opts.max_log_threshold
            )));
        }
        at_hi = evaluate(hi)?;
        iterations += 1;
    }
    if accept(at_hi.mean) {
        return Ok(Calibration { log_threshold: hi, achieved: Some(at_hi), iterations });
    }
    for _ in 0..opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        let m = evaluate(mid)?;
        iterations += 1;
        if accept(m.mean) {
            return Ok(Calibration { log_threshold: mid, achieved: Some(m), iterations });
        }
        if m.mean < eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "bisection for eta = {eta} did not settle in {} steps (bracket [{lo}, {hi}])",
        opts.max_iterations
    )))
}

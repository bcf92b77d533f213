// SPDX-License-Identifier: MIT OR Apache-2.0

use log::warn;
use rayon::prelude::*;

use super::{simulate, TrialConfig, TrialResult};
use crate::error::{Error, Result};
use crate::observation::{ChangePoint, DensityPair};
use crate::seeding::trial_rng;
use crate::stats::{Accumulator, MetricEstimate};

/// Monte Carlo estimate plus the bookkeeping needed to judge it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub estimate: MetricEstimate,
    /// Trials simulated, including the ones rejected by conditioning.
    pub attempted: u64,
    /// Fraction of accepted trials that hit the horizon.
    pub truncated_fraction: f64,
}

impl EstimateReport {
    pub fn acceptance_rate(&self) -> f64 {
        self.estimate.trials as f64 / self.attempted as f64
    }
}

/// How the pre-change history is conditioned when estimating `d_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// Reset to `s = 0` with an empty battery just before `t`.
    WorstCase,
    /// Simulate slots `1..t` as they come and keep trials with `T >= t`.
    Honest,
    /// `WorstCase` for equalizer policies, `Honest` otherwise.
    Auto,
}

impl Conditioning {
    fn resets(self, policy: &crate::policy::Policy) -> bool {
        match self {
            Conditioning::WorstCase => true,
            Conditioning::Honest => false,
            Conditioning::Auto => policy.is_equalizer(),
        }
    }
}

impl std::str::FromStr for Conditioning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst_case" | "reset" => Ok(Conditioning::WorstCase),
            "honest" => Ok(Conditioning::Honest),
            "auto" => Ok(Conditioning::Auto),
            other => Err(Error::Config(format!("unknown conditioning '{other}'"))),
        }
    }
}

fn outcomes<D, F>(cfg: &TrialConfig<D>, trials: u64, reset_at: Option<u64>, map: F) -> Result<Vec<(Option<f64>, bool)>>
where
    D: DensityPair,
    F: Fn(&TrialResult) -> Option<f64> + Sync,
{
    cfg.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let r = simulate(cfg, &mut trial_rng(cfg.seed, i), reset_at)?;
            Ok((map(&r), r.truncated))
        })
        .collect()
}

/// Runs `trials` trials in parallel and maps each to an optional sample
/// (`None` = rejected). Aggregation is sequential in trial order.
fn collect<D, F>(cfg: &TrialConfig<D>, trials: u64, reset_at: Option<u64>, map: F) -> Result<EstimateReport>
where
    D: DensityPair,
    F: Fn(&TrialResult) -> Option<f64> + Sync,
{
    if trials < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 trials, got {trials}")));
    }
    let outcomes = outcomes(cfg, trials, reset_at, map)?;
    let mut acc = Accumulator::default();
    let mut truncated = 0u64;
    for (value, trunc) in outcomes {
        if let Some(v) = value {
            acc.push(v);
            truncated += u64::from(trunc);
        }
    }
    let estimate = acc.estimate().ok_or_else(|| {
        Error::InvalidParameter(format!("fewer than 2 of {trials} trials survived conditioning"))
    })?;
    Ok(EstimateReport {
        estimate,
        attempted: trials,
        truncated_fraction: truncated as f64 / estimate.trials as f64,
    })
}

fn warn_truncation(what: &str, report: &EstimateReport) {
    if report.truncated_fraction > 1e-3 {
        warn!(
            "{what}: {:.3}% of trials hit the horizon, estimate is biased low",
            100.0 * report.truncated_fraction
        );
    }
}

/// `E_inf[T]`: mean stop time with no change.
pub fn estimate_system_arl<D: DensityPair + Clone>(
    cfg: &TrialConfig<D>,
    trials: u64,
) -> Result<EstimateReport> {
    let cfg = cfg.with_change_point(ChangePoint::Never);
    let report = collect(&cfg, trials, None, |r| Some(r.stop_time as f64))?;
    warn_truncation("system ARL", &report);
    Ok(report)
}

/// `E_inf[N]`: mean number of non-trivial observations to a false alarm.
pub fn estimate_algorithm_arl<D: DensityPair + Clone>(
    cfg: &TrialConfig<D>,
    trials: u64,
) -> Result<EstimateReport> {
    let cfg = cfg.with_change_point(ChangePoint::Never);
    let report = collect(&cfg, trials, None, |r| Some(r.sample_count as f64))?;
    warn_truncation("algorithm ARL", &report);
    Ok(report)
}

/// `d_t = E_t[(T - t + 1)^+ | F_{t-1}]` under the chosen conditioning,
/// averaged over trials that have not alarmed before `t`.
pub fn estimate_lorden_delay<D: DensityPair + Clone>(
    cfg: &TrialConfig<D>,
    change_point: u64,
    trials: u64,
    conditioning: Conditioning,
) -> Result<EstimateReport> {
    let t = change_point;
    let cfg = cfg.with_change_point(ChangePoint::at(t)?);
    let reset_at = conditioning.resets(&cfg.policy).then_some(t);
    let report = collect(&cfg, trials, reset_at, |r| {
        (r.stop_time >= t).then(|| (r.stop_time - t + 1) as f64)
    })?;
    if report.acceptance_rate() < 0.5 {
        warn!(
            "Lorden delay at t={t}: conditioning kept only {:.1}% of trials",
            100.0 * report.acceptance_rate()
        );
    }
    warn_truncation("Lorden delay", &report);
    Ok(report)
}

/// Raw `T - t + 1` samples behind [`estimate_lorden_delay`], in trial order.
/// Truncated trials are kept at their horizon value.
pub fn sample_lorden_delays<D: DensityPair + Clone>(
    cfg: &TrialConfig<D>,
    change_point: u64,
    trials: u64,
    conditioning: Conditioning,
) -> Result<Vec<f64>> {
    let t = change_point;
    let cfg = cfg.with_change_point(ChangePoint::at(t)?);
    let reset_at = conditioning.resets(&cfg.policy).then_some(t);
    let samples = outcomes(&cfg, trials, reset_at, |r| {
        (r.stop_time >= t).then(|| (r.stop_time - t + 1) as f64)
    })?;
    Ok(samples.into_iter().filter_map(|(v, _)| v).collect())
}

/// `E_t[T - t | T >= t]` with the pre-change path simulated honestly.
pub fn estimate_pollak_delay<D: DensityPair + Clone>(
    cfg: &TrialConfig<D>,
    change_point: u64,
    trials: u64,
) -> Result<EstimateReport> {
    let t = change_point;
    let cfg = cfg.with_change_point(ChangePoint::at(t)?);
    let report = collect(&cfg, trials, None, |r| {
        (r.stop_time >= t).then(|| (r.stop_time - t) as f64)
    })?;
    if report.acceptance_rate() < 0.5 {
        warn!(
            "Pollak delay at t={t}: only {:.1}% of trials reached the change point",
            100.0 * report.acceptance_rate()
        );
    }
    warn_truncation("Pollak delay", &report);
    Ok(report)
}

/// Largest per-change-point estimate over `change_points`, with its `t`.
/// Each `t` gets its own seed derived from `cfg.seed`.
pub fn sup_over_change_points<D, F>(
    cfg: &TrialConfig<D>,
    change_points: &[u64],
    mut estimate: F,
) -> Result<(u64, EstimateReport)>
where
    D: DensityPair + Clone,
    F: FnMut(&TrialConfig<D>, u64) -> Result<EstimateReport>,
{
    let mut best: Option<(u64, EstimateReport)> = None;
    for &t in change_points {
        let c = cfg.with_seed(crate::seeding::derive_seed(cfg.seed, &[t]));
        let r = estimate(&c, t)?;
        if best.is_none_or(|(_, b)| r.estimate.mean > b.estimate.mean) {
            best = Some((t, r));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty change-point grid".into()))
}

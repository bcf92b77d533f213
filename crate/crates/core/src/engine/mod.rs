// SPDX-License-Identifier: MIT OR Apache-2.0

//! Full-system trials: arrivals, policy, battery, censored observation and
//! CUSUM, slot by slot.
//!
//! Trials are independent and seeded by `(seed, trial_index)`, so estimators
//! can fan them out over a rayon pool and still aggregate bit-identical
//! results in trial-index order.

mod analytics;
mod calibrate;
mod estimate;
mod occupancy;

pub use analytics::{analytic_performance, asymptotic_delay, AnalyticPerformance, ExcursionStats};
pub use calibrate::{algorithm_arl_iid, calibrate_threshold, Calibration, CalibrationOptions, Target};
pub use estimate::{
    estimate_algorithm_arl, estimate_lorden_delay, estimate_pollak_delay, estimate_system_arl,
    sample_lorden_delays, sup_over_change_points, Conditioning, EstimateReport,
};
pub use occupancy::{simulate_occupancy, OccupancyReport};

use rand::Rng;

use crate::detector::{cusum_update, page_stopped, CusumState};
use crate::energy::{battery_step, sample_arrival, ArrivalPmf, BatteryState};
use crate::error::{Error, Result};
use crate::observation::{sample, ChangePoint, DensityPair};
use crate::policy::{Policy, PolicyContext};
use crate::seeding::trial_rng;

#[derive(Debug, Clone)]
pub struct TrialConfig<D> {
    pub pair: D,
    pub arrivals: ArrivalPmf,
    pub capacity: u32,
    pub policy: Policy,
    /// `log B`.
    pub log_threshold: f64,
    pub change_point: ChangePoint,
    pub max_horizon: u64,
    pub seed: u64,
}

impl<D: DensityPair> TrialConfig<D> {
    pub fn validate(&self) -> Result<()> {
        if self.log_threshold.is_nan() {
            return Err(Error::InvalidParameter("log threshold is NaN".into()));
        }
        if self.max_horizon == 0 {
            return Err(Error::InvalidParameter("max_horizon must be positive".into()));
        }
        if let ChangePoint::At(0) = self.change_point {
            return Err(Error::InvalidParameter("change point must be >= 1".into()));
        }
        match self.policy {
            Policy::Immediate if !self.arrivals.is_bernoulli() => Err(Error::InvalidParameter(
                "the immediate policy needs Bernoulli arrivals; use generalized_immediate".into(),
            )),
            Policy::SaveTest(p) if p.energy_threshold > self.capacity => {
                Err(Error::InvalidParameter(format!(
                    "save-test energy threshold {} exceeds capacity {}",
                    p.energy_threshold, self.capacity
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn with_change_point(&self, change_point: ChangePoint) -> Self
    where
        D: Clone,
    {
        Self {
            change_point,
            ..self.clone()
        }
    }

    pub fn with_log_threshold(&self, log_threshold: f64) -> Self
    where
        D: Clone,
    {
        Self {
            log_threshold,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self
    where
        D: Clone,
    {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialResult {
    /// Slot at which Page's rule stopped, or `max_horizon` if truncated.
    pub stop_time: u64,
    /// Number of non-trivial observations up to the stop.
    pub sample_count: u64,
    pub truncated: bool,
    pub final_battery: u32,
}

/// Runs one trial on stream 0 of `cfg.seed`.
pub fn run_trial<D: DensityPair>(cfg: &TrialConfig<D>) -> Result<TrialResult> {
    cfg.validate()?;
    simulate(cfg, &mut trial_rng(cfg.seed, 0), None)
}

/// Trial loop. With `reset_at = Some(t)` the CUSUM statistic is set to 0 and
/// the battery emptied just before slot `t`, which is the worst-case pre-change
/// history for the equalizer policies. A trial may stop before `t`.
pub(crate) fn simulate<D: DensityPair, R: Rng + ?Sized>(
    cfg: &TrialConfig<D>,
    rng: &mut R,
    reset_at: Option<u64>,
) -> Result<TrialResult> {
    let mut cusum = CusumState::new(cfg.log_threshold);
    let mut battery = BatteryState::empty(cfg.capacity);
    let mut samples = 0u64;
    for k in 1..=cfg.max_horizon {
        if reset_at == Some(k) {
            cusum.reset();
            battery = BatteryState::empty(cfg.capacity);
        }
        let arrival = sample_arrival(&cfg.arrivals, rng);
        let ctx = PolicyContext {
            current_arrival: arrival,
            battery_before_decision: battery,
            detector_statistic: cusum.log_statistic,
            time_index: k,
        };
        let spend = cfg.policy.decide(&ctx);
        battery = battery_step(battery, arrival, spend)?;
        let llr = if spend {
            samples += 1;
            let x = sample(&cfg.pair, cfg.change_point, k, rng);
            cfg.pair.log_likelihood_ratio(x)
        } else {
            0.0
        };
        cusum = cusum_update(cusum, llr);
        if page_stopped(&cusum) {
            return Ok(TrialResult {
                stop_time: k,
                sample_count: samples,
                truncated: false,
                final_battery: battery.level(),
            });
        }
    }
    Ok(TrialResult {
        stop_time: cfg.max_horizon,
        sample_count: samples,
        truncated: true,
        final_battery: battery.level(),
    })
}

/// Truncation horizon `200 * max(gamma, eta) / rate`.
///
/// With `B = gamma` the false-alarm time runs at roughly `10 B / rate` slots
/// once the overshoot is counted, so the horizon scales with `1 / rate` for
/// both targets. `rate` is floored at 1e-3 to keep energy-starved setups
/// finite.
pub fn default_horizon(gamma: Option<f64>, eta: Option<f64>, rate: f64) -> u64 {
    let target = gamma.unwrap_or(0.0).max(eta.unwrap_or(0.0));
    (200.0 * target / rate.max(1e-3)).ceil().max(1_000.0) as u64
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Renewal formulas for `(immediate, Page)` and the first-order asymptotics.
//!
//! Page's statistic restarts every time the LLR sum drops to `<= 0`, so the
//! observation count at the stop is a geometric number of independent
//! excursions from `(0, log B)`. With `kappa` the excursion length and `F_0` the
//! lower exit,
//!
//! ```text
//! E_inf[N] = E_inf[kappa] / (1 - P_inf(F_0))
//! d        = (1/p) E_1[kappa] / (1 - P_1(F_0))
//! ```

use rayon::prelude::*;

use crate::detector::{run_excursion, ExitSide, Regime};
use crate::error::{Error, Result};
use crate::observation::DensityPair;
use crate::seeding::{derive_seed, trial_rng};
use crate::stats::{Accumulator, MetricEstimate};

/// Summary of simulated excursions under one regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionStats {
    pub mean_exit_time: f64,
    /// `P(F_0)`, the lower-exit probability.
    pub lower_exit_prob: f64,
    pub excursions: u64,
    /// `E[kappa] / (1 - P(F_0))` with a delta-method standard error.
    pub observations_to_stop: MetricEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPerformance {
    /// `E_inf[N]`.
    pub arl_alg: MetricEstimate,
    /// `d(mu*, T_p)` in slots for Bernoulli rate `p`.
    pub lorden_delay: MetricEstimate,
    pub pre_change: ExcursionStats,
    pub post_change: ExcursionStats,
}

fn excursion_stats<D: DensityPair>(
    pair: &D,
    regime: Regime,
    log_threshold: f64,
    n: u64,
    seed: u64,
) -> Result<ExcursionStats> {
    let runs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let e = run_excursion(pair, regime, log_threshold, &mut trial_rng(seed, i))?;
            Ok((e.exit_time as f64, f64::from(u8::from(e.exit_side == ExitSide::Upper))))
        })
        .collect::<Result<_>>()?;
    let mut kappa = Accumulator::default();
    let mut upper = Accumulator::default();
    for &(k, u) in &runs {
        kappa.push(k);
        upper.push(u);
    }
    let q = upper.mean();
    let ratio = kappa.mean() / q;
    // delta method for a ratio of means: Var(kappa - R * M) / (n q^2)
    let std_error = if q > 0.0 {
        let mut resid = Accumulator::default();
        runs.iter().for_each(|&(k, u)| resid.push(k - ratio * u));
        (resid.variance() / n as f64).sqrt() / q
    } else {
        f64::INFINITY
    };
    Ok(ExcursionStats {
        mean_exit_time: kappa.mean(),
        lower_exit_prob: 1.0 - q,
        excursions: n,
        observations_to_stop: MetricEstimate {
            mean: ratio,
            std_error,
            trials: n,
        },
    })
}

/// Estimates `E_inf[N]` and the Lorden delay of `(immediate, Page)` from
/// `excursions` simulated excursions per regime.
pub fn analytic_performance<D: DensityPair>(
    pair: &D,
    log_threshold: f64,
    p: f64,
    excursions: u64,
    seed: u64,
) -> Result<AnalyticPerformance> {
    if !(log_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "renewal formulas need log B > 0, got {log_threshold}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("arrival rate must be in (0, 1], got {p}")));
    }
    if excursions < 2 {
        return Err(Error::InvalidParameter("need at least 2 excursions".into()));
    }
    let pre = excursion_stats(pair, Regime::PreChange, log_threshold, excursions, derive_seed(seed, &[0]))?;
    let post = excursion_stats(pair, Regime::PostChange, log_threshold, excursions, derive_seed(seed, &[1]))?;
    Ok(AnalyticPerformance {
        arl_alg: pre.observations_to_stop,
        lorden_delay: post.observations_to_stop.scaled(1.0 / p),
        pre_change: pre,
        post_change: post,
    })
}

/// First-order delay `log_threshold / (rate * I)`; `rate` is `p` for Bernoulli
/// arrivals or the effective sampling rate for a general pmf.
pub fn asymptotic_delay(kl: f64, rate: f64, log_threshold: f64) -> f64 {
    debug_assert!(kl > 0.0 && rate > 0.0 && rate <= 1.0);
    log_threshold / (rate * kl)
}

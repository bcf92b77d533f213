// SPDX-License-Identifier: MIT OR Apache-2.0

//! Log-domain detection statistics.
//!
//! The CUSUM recursion `S_k = max(S_{k-1}, 1) L(Z_k)` becomes
//! `s_k = max(s_{k-1}, 0) + l(Z_k)` with `s_0 = 0`, and Page's rule stops at
//! the first `k` with `s_k >= log B`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::observation::DensityPair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumState {
    pub log_statistic: f64,
    pub log_threshold: f64,
}

impl CusumState {
    pub fn new(log_threshold: f64) -> Self {
        Self {
            log_statistic: 0.0,
            log_threshold,
        }
    }

    /// Resets the statistic to `s = 0` (`W = 1`).
    pub fn reset(&mut self) {
        self.log_statistic = 0.0;
    }
}

pub fn cusum_update(state: CusumState, llr_value: f64) -> CusumState {
    CusumState {
        log_statistic: state.log_statistic.max(0.0) + llr_value,
        ..state
    }
}

pub fn page_stopped(state: &CusumState) -> bool {
    state.log_statistic >= state.log_threshold
}

/// One-sided SPRT: running LLR sum from its start slot, upper boundary only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtState {
    pub log_sum: f64,
    pub log_threshold: f64,
}

impl SprtState {
    pub fn new(log_threshold: f64) -> Self {
        Self {
            log_sum: 0.0,
            log_threshold,
        }
    }
}

pub fn sprt_update(state: SprtState, llr_value: f64) -> SprtState {
    SprtState {
        log_sum: state.log_sum + llr_value,
        ..state
    }
}

pub fn sprt_stopped(state: &SprtState) -> bool {
    state.log_sum >= state.log_threshold
}

/// Index (1-based) at which Page's rule stops on a fixed LLR sequence.
pub fn page_stop_index(llrs: &[f64], log_threshold: f64) -> Option<usize> {
    let mut s = CusumState::new(log_threshold);
    llrs.iter().position(|&l| {
        s = cusum_update(s, l);
        page_stopped(&s)
    })
    .map(|i| i + 1)
}

/// Index (1-based) at which the one-sided SPRT started at slot 1 stops.
pub fn sprt_stop_index(llrs: &[f64], log_threshold: f64) -> Option<usize> {
    let mut s = SprtState::new(log_threshold);
    llrs.iter().position(|&l| {
        s = sprt_update(s, l);
        sprt_stopped(&s)
    })
    .map(|i| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PreChange,
    PostChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitSide {
    Upper,
    Lower,
}

/// Exit of the LLR random walk from `(0, log B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExcursionResult {
    /// Number of non-trivial observations until exit, at least 1.
    pub exit_time: u64,
    pub exit_side: ExitSide,
}

/// Sums i.i.d. LLRs of non-trivial observations drawn under `regime` until the
/// sum leaves the open interval `(0, log B)`: lower exit at `<= 0`, upper at
/// `>= log B`.
pub fn run_excursion<D: DensityPair, R: Rng + ?Sized>(
    pair: &D,
    regime: Regime,
    log_threshold: f64,
    rng: &mut R,
) -> Result<ExcursionResult> {
    if !(log_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "excursion needs log B > 0, got {log_threshold}"
        )));
    }
    let mut sum = 0.0;
    let mut steps = 0u64;
    loop {
        let x = match regime {
            Regime::PreChange => pair.sample_pre(rng),
            Regime::PostChange => pair.sample_post(rng),
        };
        sum += pair.log_likelihood_ratio(x);
        steps += 1;
        if sum <= 0.0 {
            return Ok(ExcursionResult {
                exit_time: steps,
                exit_side: ExitSide::Lower,
            });
        }
        if sum >= log_threshold {
            return Ok(ExcursionResult {
                exit_time: steps,
                exit_side: ExitSide::Upper,
            });
        }
    }
}

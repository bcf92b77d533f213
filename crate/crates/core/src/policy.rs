// SPDX-License-Identifier: MIT OR Apache-2.0

//! Causal sampling policies.
//!
//! A policy sees only what is available at the start of slot `k`: the new
//! arrival, the battery after slot `k-1` and the detector statistic computed
//! from `Z_1 .. Z_{k-1}`.

use std::fmt;
use std::str::FromStr;

use crate::energy::BatteryState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyContext {
    pub current_arrival: u32,
    pub battery_before_decision: BatteryState,
    /// Log-domain CUSUM value after slot `k-1`.
    pub detector_statistic: f64,
    pub time_index: u64,
}

impl PolicyContext {
    pub fn available_energy(&self) -> u32 {
        self.battery_before_decision.available(self.current_arrival)
    }
}

/// Two-threshold save-test rule: hoard energy while both the available energy
/// is below `energy_threshold` and the statistic is below `statistic_threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaveTestParams {
    pub energy_threshold: u32,
    pub statistic_threshold: f64,
}

impl SaveTestParams {
    pub fn new(energy_threshold: u32, statistic_threshold: f64, capacity: u32) -> Result<Self> {
        if energy_threshold > capacity {
            return Err(Error::InvalidParameter(format!(
                "save-test energy threshold {energy_threshold} exceeds capacity {capacity}"
            )));
        }
        if statistic_threshold.is_nan() {
            return Err(Error::InvalidParameter("save-test statistic threshold is NaN".into()));
        }
        Ok(Self {
            energy_threshold,
            statistic_threshold,
        })
    }
}

/// Sample whenever a unit arrives (`mu = nu`). Meant for Bernoulli arrivals.
pub fn immediate_decide(ctx: &PolicyContext) -> bool {
    ctx.current_arrival >= 1
}

/// Sample as long as the battery plus the current arrival is not empty.
pub fn generalized_immediate_decide(ctx: &PolicyContext) -> bool {
    ctx.available_energy() >= 1
}

pub fn save_test_decide(ctx: &PolicyContext, params: &SaveTestParams) -> bool {
    let energy = ctx.available_energy();
    if energy == 0 {
        return false;
    }
    let save = energy < params.energy_threshold && ctx.detector_statistic < params.statistic_threshold;
    !save
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Immediate,
    GeneralizedImmediate,
    SaveTest(SaveTestParams),
}

impl Policy {
    pub fn decide(&self, ctx: &PolicyContext) -> bool {
        match self {
            Policy::Immediate => immediate_decide(ctx),
            Policy::GeneralizedImmediate => generalized_immediate_decide(ctx),
            Policy::SaveTest(params) => save_test_decide(ctx, params),
        }
    }

    /// Decisions ignore the detector statistic, so the non-trivial observations
    /// form an i.i.d. sequence whatever the arrival process.
    pub fn is_statistic_blind(&self) -> bool {
        !matches!(self, Policy::SaveTest(_))
    }

    /// Whether the per-change-point delay is constant given the worst-case
    /// (reset) conditioning.
    pub fn is_equalizer(&self) -> bool {
        self.is_statistic_blind()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Immediate => "immediate",
            Policy::GeneralizedImmediate => "generalized_immediate",
            Policy::SaveTest(_) => "save_test",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Policy family without parameters, as named in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Immediate,
    GeneralizedImmediate,
    SaveTest,
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "immediate" => Ok(PolicyKind::Immediate),
            "generalized_immediate" => Ok(PolicyKind::GeneralizedImmediate),
            "save_test" => Ok(PolicyKind::SaveTest),
            other => Err(Error::Config(format!("unknown policy '{other}'"))),
        }
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::energy::{battery_step, sample_arrival, ArrivalPmf, BatteryState};
use crate::error::{Error, Result};
use crate::seeding::trial_rng;
use crate::stats::{Accumulator, MetricEstimate};

/// Long-run battery occupancy under the generalized immediate policy.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyReport {
    /// Fraction of slots ending at each level, with batch-means errors.
    pub state_fraction: Vec<MetricEstimate>,
    /// Fraction of slots in which a sample was taken.
    pub sampling_fraction: MetricEstimate,
}

/// Simulates `batches * batch_len` slots on one stream, starting from an
/// empty battery. Standard errors come from batch means, which absorb the
/// chain's autocorrelation when batches are long compared to its mixing time.
pub fn simulate_occupancy(
    pmf: &ArrivalPmf,
    capacity: u32,
    batches: u64,
    batch_len: u64,
    seed: u64,
) -> Result<OccupancyReport> {
    if batches < 2 || batch_len == 0 {
        return Err(Error::InvalidParameter("need at least 2 non-empty batches".into()));
    }
    let states = capacity as usize + 1;
    let mut rng = trial_rng(seed, 0);
    let mut battery = BatteryState::empty(capacity);
    let mut per_state = vec![Accumulator::default(); states];
    let mut sampling = Accumulator::default();
    for _ in 0..batches {
        let mut counts = vec![0u64; states];
        let mut sampled = 0u64;
        for _ in 0..batch_len {
            let arrival = sample_arrival(pmf, &mut rng);
            let spend = battery.available(arrival) >= 1;
            battery = battery_step(battery, arrival, spend)?;
            counts[battery.level() as usize] += 1;
            sampled += u64::from(spend);
        }
        for (acc, c) in per_state.iter_mut().zip(&counts) {
            acc.push(*c as f64 / batch_len as f64);
        }
        sampling.push(sampled as f64 / batch_len as f64);
    }
    Ok(OccupancyReport {
        state_fraction: per_state.iter().map(|a| a.estimate().expect("batches >= 2")).collect(),
        sampling_fraction: sampling.estimate().expect("batches >= 2"),
    })
}

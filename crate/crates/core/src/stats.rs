// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small statistics helpers: Monte Carlo means with standard errors, least
//! squares slopes and the two-sample Kolmogorov-Smirnov statistic.

use std::fmt;

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(trials)`.
    pub std_error: f64,
    pub trials: u64,
}

impl MetricEstimate {
    /// Estimate from raw samples. Returns `None` with fewer than two samples.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let mut acc = Accumulator::default();
        samples.iter().for_each(|&x| acc.push(x));
        acc.estimate()
    }

    /// `sqrt(se_a^2 + se_b^2)`, the standard error of a difference of two
    /// independent estimates.
    pub fn combined_se(&self, other: &MetricEstimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    /// Scales mean and standard error by a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            std_error: self.std_error * factor.abs(),
            trials: self.trials,
        }
    }

    /// Number of combined standard errors separating two estimates.
    pub fn z_score(&self, other: &MetricEstimate) -> f64 {
        let se = self.combined_se(other);
        if se == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / se
        }
    }
}

impl fmt::Display for MetricEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4} (n={})", self.mean, self.std_error, self.trials)
    }
}

/// Welford running mean/variance. Push order fixes the floating point result.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Option<MetricEstimate> {
        (self.n >= 2).then(|| MetricEstimate {
            mean: self.mean,
            std_error: (self.variance() / self.n as f64).sqrt(),
            trials: self.n,
        })
    }
}

/// Ordinary least squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (na, nb) = (na as f64, nb as f64);
    c * ((na + nb) / (na * nb)).sqrt()
}

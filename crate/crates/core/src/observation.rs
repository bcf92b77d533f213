// SPDX-License-Identifier: MIT OR Apache-2.0

//! Observation model: pre/post-change densities, log-likelihood ratios and
//! censored observations.
//!
//! All likelihood arithmetic stays in the log domain.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A pair of densities `f0` (before the change) and `f1` (after).
pub trait DensityPair: Send + Sync {
    fn log_pdf_pre(&self, x: f64) -> f64;
    fn log_pdf_post(&self, x: f64) -> f64;

    /// `log f1(x) - log f0(x)`.
    fn log_likelihood_ratio(&self, x: f64) -> f64 {
        self.log_pdf_post(x) - self.log_pdf_pre(x)
    }

    /// `I(f1, f0)`, the mean post-change log-likelihood ratio.
    fn kl_divergence(&self) -> f64;

    /// `I(f0, f1)`, so that the mean pre-change LLR is `-reverse_kl_divergence()`.
    fn reverse_kl_divergence(&self) -> f64;

    fn sample_pre<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
    fn sample_post<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

/// Zero-mean Gaussian whose variance grows from `sigma2` to
/// `sigma2 + signal_power` at the change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianVariancePair {
    sigma2: f64,
    signal_power: f64,
    sd_pre: f64,
    sd_post: f64,
}

impl GaussianVariancePair {
    pub fn new(sigma2: f64, signal_power: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma2 must be > 0, got {sigma2}")));
        }
        if !(signal_power.is_finite() && signal_power >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signal power must be >= 0, got {signal_power}"
            )));
        }
        Ok(Self {
            sigma2,
            signal_power,
            sd_pre: sigma2.sqrt(),
            sd_post: (sigma2 + signal_power).sqrt(),
        })
    }

    /// Pair with `P = sigma2 * 10^(snr_db / 10)`.
    pub fn from_snr_db(sigma2: f64, snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidParameter(format!("snr_db must be finite, got {snr_db}")));
        }
        Self::new(sigma2, power_from_snr(sigma2, snr_db))
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn signal_power(&self) -> f64 {
        self.signal_power
    }

    pub fn snr_db(&self) -> f64 {
        snr_db(self.sigma2, self.signal_power)
    }

    fn ratio(&self) -> f64 {
        self.signal_power / self.sigma2
    }
}

/// `10 log10(P / sigma2)`; `-inf` for zero power.
pub fn snr_db(sigma2: f64, signal_power: f64) -> f64 {
    10.0 * (signal_power / sigma2).log10()
}

pub fn power_from_snr(sigma2: f64, snr_db: f64) -> f64 {
    sigma2 * 10f64.powf(snr_db / 10.0)
}

fn gaussian_log_pdf(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - x * x / (2.0 * var)
}

impl DensityPair for GaussianVariancePair {
    fn log_pdf_pre(&self, x: f64) -> f64 {
        gaussian_log_pdf(x, self.sigma2)
    }

    fn log_pdf_post(&self, x: f64) -> f64 {
        gaussian_log_pdf(x, self.sigma2 + self.signal_power)
    }

    fn log_likelihood_ratio(&self, x: f64) -> f64 {
        let total = self.sigma2 + self.signal_power;
        -0.5 * self.ratio().ln_1p() + x * x * self.signal_power / (2.0 * self.sigma2 * total)
    }

    fn kl_divergence(&self) -> f64 {
        let r = self.ratio();
        0.5 * (r - r.ln_1p())
    }

    fn reverse_kl_divergence(&self) -> f64 {
        let r = self.ratio();
        0.5 * (r.ln_1p() - r / (1.0 + r))
    }

    fn sample_pre<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.sd_pre * z
    }

    fn sample_post<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.sd_post * z
    }
}

/// When the distribution changes. `Never` is the no-change regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChangePoint {
    At(u64),
    Never,
}

impl ChangePoint {
    pub fn at(t: u64) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("change point must be >= 1".into()));
        }
        Ok(ChangePoint::At(t))
    }

    /// Whether slot `k` is drawn from the post-change density.
    pub fn is_post_change(&self, k: u64) -> bool {
        match *self {
            ChangePoint::At(t) => k >= t,
            ChangePoint::Never => false,
        }
    }
}

impl fmt::Display for ChangePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangePoint::At(t) => write!(f, "{t}"),
            ChangePoint::Never => f.write_str("inf"),
        }
    }
}

/// Censored observation `Z_k`: a real sample when the sensor spent energy,
/// the trivial marker otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Sample(f64),
    Trivial,
}

impl Observation {
    pub fn took_sample(&self) -> bool {
        matches!(self, Observation::Sample(_))
    }
}

pub fn kl_divergence<D: DensityPair>(pair: &D) -> f64 {
    pair.kl_divergence()
}

/// Log-likelihood ratio of a censored observation; trivial observations
/// carry no information and contribute exactly 0.
pub fn llr<D: DensityPair>(pair: &D, obs: Observation) -> f64 {
    match obs {
        Observation::Sample(x) => pair.log_likelihood_ratio(x),
        Observation::Trivial => 0.0,
    }
}

/// Draws `X_k` for slot `k` (1-based).
pub fn sample<D: DensityPair, R: Rng + ?Sized>(
    pair: &D,
    change: ChangePoint,
    k: u64,
    rng: &mut R,
) -> f64 {
    debug_assert!(k >= 1);
    if change.is_post_change(k) {
        pair.sample_post(rng)
    } else {
        pair.sample_pre(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::trial_rng;
    use crate::stats::Accumulator;
    use proptest::prelude::*;

    fn pair(p: f64) -> GaussianVariancePair {
        GaussianVariancePair::new(1.0, p).unwrap()
    }

    /// Trapezoid rule of f1 log(f1/f0) from density evaluations only.
    fn kl_by_quadrature(p: &GaussianVariancePair) -> f64 {
        let (lo, hi, n) = (-40.0, 40.0, 400_000);
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| {
                let x = lo + i as f64 * h;
                let lp1 = p.log_pdf_post(x);
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * lp1.exp() * (lp1 - p.log_pdf_pre(x))
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn kl_at_five_db() {
        let p = GaussianVariancePair::from_snr_db(1.0, 5.0).unwrap();
        assert!((kl_divergence(&p) - 0.8681).abs() < 1e-4);
    }

    #[test]
    fn kl_zero_power() {
        assert_eq!(kl_divergence(&pair(0.0)), 0.0);
    }

    #[test]
    fn kl_zero_db_matches_quadrature() {
        let p = GaussianVariancePair::from_snr_db(1.0, 0.0).unwrap();
        let oracle = kl_by_quadrature(&p);
        assert!((oracle - 0.153426).abs() < 1e-6, "oracle {oracle}");
        assert!((kl_divergence(&p) - oracle).abs() < 1e-8);
    }

    #[test]
    fn kl_monotone_in_power() {
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let kls: Vec<f64> = grid.iter().map(|&p| kl_divergence(&pair(p))).collect();
        assert!(kls.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn llr_examples() {
        let p = pair(1.0);
        assert_eq!(llr(&p, Observation::Trivial), 0.0);
        let at_zero = llr(&p, Observation::Sample(0.0));
        assert!((at_zero - (-0.5 * 2f64.ln())).abs() < 1e-12);
        assert!((at_zero - (-0.346574)).abs() < 1e-6);
        let root = (2.0 * 2f64.ln()).sqrt();
        assert!((root - 1.17741).abs() < 1e-5);
        assert!(llr(&p, Observation::Sample(root)).abs() < 1e-12);
        // density-ratio route
        let direct = p.log_pdf_post(root) - p.log_pdf_pre(root);
        assert!(direct.abs() < 1e-12);
    }

    #[test]
    fn snr_round_trip() {
        for db in [-10.0, 0.0, 5.0, 13.0] {
            let p = GaussianVariancePair::from_snr_db(2.0, db).unwrap();
            assert!((p.snr_db() - db).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianVariancePair::new(0.0, 1.0).is_err());
        assert!(GaussianVariancePair::new(1.0, -1.0).is_err());
        assert!(GaussianVariancePair::new(f64::NAN, 1.0).is_err());
        assert!(ChangePoint::at(0).is_err());
    }

    #[test]
    fn regimes_select_density() {
        assert!(!ChangePoint::Never.is_post_change(1_000_000));
        assert!(ChangePoint::At(1).is_post_change(1));
        assert!(!ChangePoint::At(5).is_post_change(4));
        assert!(ChangePoint::At(5).is_post_change(5));
    }

    #[test]
    fn post_change_variance() {
        let p = pair(1.0);
        let mut rng = trial_rng(11, 0);
        let mut acc = Accumulator::default();
        for _ in 0..1_000_000 {
            acc.push(sample(&p, ChangePoint::At(1), 3, &mut rng));
        }
        assert!((acc.variance() - 2.0).abs() < 0.01, "var {}", acc.variance());
    }

    #[test]
    fn mean_llr_equals_kl_in_both_regimes() {
        let p = pair(1.0);
        let mut rng = trial_rng(12, 0);
        let (mut post, mut pre) = (Accumulator::default(), Accumulator::default());
        for _ in 0..1_000_000 {
            post.push(p.log_likelihood_ratio(p.sample_post(&mut rng)));
            pre.push(p.log_likelihood_ratio(p.sample_pre(&mut rng)));
        }
        let post = post.estimate().unwrap();
        let pre = pre.estimate().unwrap();
        assert!((post.mean - p.kl_divergence()).abs() < 4.0 * post.std_error);
        assert!((pre.mean + p.reverse_kl_divergence()).abs() < 4.0 * pre.std_error);
    }

    proptest! {
        #[test]
        fn closed_form_llr_matches_density_ratio(
            sigma2 in 0.01f64..10.0, power in 0.0f64..20.0, x in -30.0f64..30.0
        ) {
            let p = GaussianVariancePair::new(sigma2, power).unwrap();
            let closed = p.log_likelihood_ratio(x);
            let direct = p.log_pdf_post(x) - p.log_pdf_pre(x);
            let scale = closed.abs().max(direct.abs()).max(1.0);
            prop_assert!((closed - direct).abs() <= 1e-12 * scale);
        }
    }
}

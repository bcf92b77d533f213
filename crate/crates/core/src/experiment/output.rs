// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV records and the plain-text summary.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;

pub const CSV_HEADER: &str = "preset,policy,sigma2,snr_db,p_or_pmf,capacity,gamma,eta,log_B,change_point,metric,mean,std_error,trials,truncated_fraction,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    LordenDelay,
    PollakDelay,
    SystemArl,
    AlgorithmArl,
    /// `E_inf[N]` reached by threshold calibration.
    CalibratedAlgorithmArl,
    /// First-order delay `log(target) / (rate I)`.
    Asymptote,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::LordenDelay => "lorden_delay",
            Metric::PollakDelay => "pollak_delay",
            Metric::SystemArl => "system_arl",
            Metric::AlgorithmArl => "algorithm_arl",
            Metric::CalibratedAlgorithmArl => "calibrated_algorithm_arl",
            Metric::Asymptote => "asymptote",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Metric::LordenDelay,
            Metric::PollakDelay,
            Metric::SystemArl,
            Metric::AlgorithmArl,
            Metric::Asymptote,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

/// One CSV row: the configuration in effect plus one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub preset: String,
    pub policy: String,
    pub sigma2: f64,
    pub snr_db: f64,
    pub p_or_pmf: String,
    pub capacity: u32,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub log_threshold: f64,
    /// `t`, `inf`, or empty when not applicable.
    pub change_point: String,
    pub metric: Metric,
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub truncated_fraction: f64,
    pub seed: u64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Record {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.preset,
            self.policy,
            self.sigma2,
            self.snr_db,
            self.p_or_pmf,
            self.capacity,
            opt(self.gamma),
            opt(self.eta),
            self.log_threshold,
            self.change_point,
            self.metric.name(),
            self.mean,
            self.std_error,
            self.trials,
            self.truncated_fraction,
            self.seed
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, records: &[Record]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()?;
    Ok(())
}

/// Everything a finished experiment reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub preset: String,
    pub seed: u64,
    pub trials: u64,
    pub kl_divergence: f64,
    /// Long-run sampling rate of the generalized immediate policy, reported
    /// for arrivals that are not Bernoulli.
    pub effective_rate: Option<f64>,
    /// `(label, log B)` for every threshold used.
    pub thresholds: Vec<(String, f64)>,
    pub records: Vec<Record>,
    /// Derived observations (slope fits, flatness checks, caveats).
    pub notes: Vec<String>,
}

pub fn emit_summary(out: &ExperimentOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "preset {}  seed {}  trials/point {}", out.preset, out.seed, out.trials);
    let _ = writeln!(s, "KL divergence I(f1, f0) = {:.4}", out.kl_divergence);
    if let Some(rate) = out.effective_rate {
        let _ = writeln!(s, "effective sampling rate p~ = 1 - p0 w0 = {rate:.4}");
    }
    if !out.thresholds.is_empty() {
        let _ = writeln!(s, "thresholds:");
        for (label, log_b) in &out.thresholds {
            let _ = writeln!(s, "  {label}: log B = {log_b:.4}");
        }
    }
    let _ = writeln!(s, "estimates:");
    for r in &out.records {
        let mut point = format!("{} {}", r.policy, r.p_or_pmf);
        if let Some(g) = r.gamma {
            let _ = write!(point, " gamma={g:.4}");
        }
        if let Some(e) = r.eta {
            let _ = write!(point, " eta={e}");
        }
        if !r.change_point.is_empty() {
            let _ = write!(point, " t={}", r.change_point);
        }
        if r.trials > 0 {
            let _ = writeln!(
                s,
                "  {:<26} {:<48} {:>12.4} ± {:<9.4} truncated {:.4}",
                r.metric.name(),
                point,
                r.mean,
                r.std_error,
                r.truncated_fraction
            );
        } else {
            let _ = writeln!(s, "  {:<26} {:<48} {:>12.4}", r.metric.name(), point, r.mean);
        }
    }
    let worst = out
        .records
        .iter()
        .map(|r| r.truncated_fraction)
        .fold(0.0, f64::max);
    let _ = writeln!(s, "max truncated fraction: {worst:.6}");
    for note in &out.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

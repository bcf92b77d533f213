// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p quickdet --test acceptance`, optionally followed by
//! `-- <substring>` to select criteria by name.

use std::process::{Command, ExitCode};
use std::time::Instant;

use quickdet::detector::{page_stop_index, sprt_stop_index};
use quickdet::energy::{build_transition_matrix, effective_sampling_rate, stationary_distribution, ArrivalPmf};
use quickdet::engine::{
    analytic_performance, estimate_algorithm_arl, estimate_lorden_delay, estimate_system_arl,
    simulate_occupancy, Conditioning, TrialConfig,
};
use quickdet::experiment::{emit_summary, run_experiment, ExperimentSpec, Metric, Preset, Record, Settings};
use quickdet::observation::{kl_divergence, ChangePoint, DensityPair, GaussianVariancePair};
use quickdet::policy::Policy;
use quickdet::seeding::trial_rng;
use quickdet::stats::{ols_slope, MetricEstimate};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_preset(preset: Preset, extra: &str) -> quickdet::experiment::ExperimentOutput {
    let spec = ExperimentSpec::new(preset, &Settings::parse(extra).unwrap()).unwrap();
    run_experiment(&spec).unwrap()
}

fn rows(out: &[Record], metric: Metric) -> Vec<&Record> {
    out.iter().filter(|r| r.metric == metric).collect()
}

fn est(r: &Record) -> MetricEstimate {
    MetricEstimate { mean: r.mean, std_error: r.std_error, trials: r.trials }
}

fn pair_db(snr_db: f64) -> GaussianVariancePair {
    GaussianVariancePair::from_snr_db(1.0, snr_db).unwrap()
}

fn paper_pmf() -> ArrivalPmf {
    ArrivalPmf::new(vec![0.8, 0.1, 0.05, 0.025, 0.025]).unwrap()
}

fn c01_kl_formula() -> Outcome {
    let i = kl_divergence(&pair_db(5.0));
    check((i - 0.8681).abs() < 1e-4, format!("I(f1,f0) at 5 dB = {i:.6}, target 0.8681 ± 1e-4"))
}

fn c02_equalizer() -> Outcome {
    let out = run_preset(Preset::Fig2, "trials = 10000\ngrid = 1,5,10,20,30");
    let imm: Vec<&Record> = rows(&out.records, Metric::LordenDelay).into_iter().filter(|r| r.policy == "immediate").collect();
    let save: Vec<&Record> = rows(&out.records, Metric::LordenDelay).into_iter().filter(|r| r.policy == "save_test").collect();
    let mut worst = 0.0f64;
    for a in &imm {
        for b in &imm {
            worst = worst.max(est(a).z_score(&est(b)));
        }
    }
    let (d1, d30) = (est(save[0]), est(save[save.len() - 1]));
    let gap = (d1.mean - d30.mean) / d1.combined_se(&d30);
    check(
        worst < 3.0 && gap > 3.0,
        format!(
            "immediate max pairwise |d_s - d_t| = {worst:.2} SE (< 3); save-test d_1 - d_30 = {:.3} = {gap:.2} SE (> 3)",
            d1.mean - d30.mean
        ),
    )
}

fn c03_monotone_in_p() -> Outcome {
    let out = run_preset(Preset::Fig3, "trials = 10000\ngrid = 300,1000\nmetrics = lorden_delay");
    let delays = rows(&out.records, Metric::LordenDelay);
    let at = |eta: f64| -> Vec<(f64, MetricEstimate)> {
        delays
            .iter()
            .filter(|r| r.eta == Some(eta))
            .map(|r| (r.p_or_pmf.parse::<f64>().unwrap(), est(r)))
            .collect()
    };
    let d300 = at(300.0);
    let mut gaps = Vec::new();
    let mut ok = d300.len() == 4;
    for w in d300.windows(2) {
        let z = (w[0].1.mean - w[1].1.mean) / w[0].1.combined_se(&w[1].1);
        gaps.push(format!("{:.1}", z));
        ok &= z > 3.0;
    }
    let d1000 = at(1000.0);
    let full = d1000.iter().find(|(p, _)| *p == 1.0).unwrap().1.mean;
    let mut ratios = Vec::new();
    for (p, e) in &d1000 {
        let r = p * e.mean / full;
        ratios.push(format!("{p}:{r:.3}"));
        ok &= (r - 1.0).abs() < 0.10;
    }
    check(
        ok,
        format!(
            "eta=300 consecutive gaps (SE) p=0.2>0.5>0.8>1.0: [{}]; eta=1000 p*delay(p)/delay(1): [{}]",
            gaps.join(", "),
            ratios.join(", ")
        ),
    )
}

fn slope_and_ordering(out: &[Record], predicted: f64, tol: f64) -> (bool, String) {
    let lorden = rows(out, Metric::LordenDelay);
    let pollak = rows(out, Metric::PollakDelay);
    let x: Vec<f64> = lorden.iter().map(|r| r.gamma.unwrap().ln()).collect();
    let y: Vec<f64> = lorden.iter().map(|r| r.mean).collect();
    let slope = ols_slope(&x, &y);
    let rel = (slope - predicted).abs() / predicted;
    let ordered = lorden.iter().zip(&pollak).all(|(l, p)| p.mean <= l.mean);
    let arl_ok = rows(out, Metric::SystemArl).iter().all(|r| r.mean >= r.gamma.unwrap());
    (
        rel < tol && ordered && arl_ok,
        format!(
            "slope {slope:.4} vs 1/(rate I) = {predicted:.4} (rel err {:.2}%, tol {:.0}%); Pollak <= Lorden at every gamma: {ordered}; E_inf[T] >= gamma: {arl_ok}",
            100.0 * rel,
            100.0 * tol
        ),
    )
}

fn c04_asymptotic_slope() -> Outcome {
    let out = run_preset(Preset::Fig4, "trials = 10000\narl_trials = 1000\ngrid = 100,1000,10000");
    let predicted = 1.0 / (0.3 * kl_divergence(&pair_db(5.0)));
    let (ok, detail) = slope_and_ordering(&out.records, predicted, 0.10);
    check(ok && (predicted - 3.839).abs() < 1e-3, detail)
}

fn c05_general_arrival_asymptote() -> Outcome {
    let out = run_preset(Preset::Fig5, "trials = 10000\narl_trials = 1000\ngrid = 100,1000,10000");
    let rate = effective_sampling_rate(&paper_pmf(), 3).unwrap();
    let predicted = 1.0 / (rate * kl_divergence(&pair_db(5.0)));
    let (ok, detail) = slope_and_ordering(&out.records, predicted, 0.15);
    let summary = emit_summary(&out);
    let reported = summary.contains("0.9964") && summary.contains("p~ = 1 - p0 w0 = 0.3610");
    check(
        ok && (rate - 0.361).abs() < 1e-3 && reported,
        format!("p~ = {rate:.5}; {detail}; discrepancy reported in summary: {reported}"),
    )
}

fn bernoulli_cfg(p: f64, snr_db: f64, log_b: f64, seed: u64) -> TrialConfig<GaussianVariancePair> {
    TrialConfig {
        pair: pair_db(snr_db),
        arrivals: ArrivalPmf::bernoulli(p).unwrap(),
        capacity: 1,
        policy: Policy::Immediate,
        log_threshold: log_b,
        change_point: ChangePoint::Never,
        max_horizon: 100_000_000,
        seed,
    }
}

fn c06_renewal_cross_validation() -> Outcome {
    let log_b = 100f64.ln();
    let cfg = bernoulli_cfg(0.5, 0.0, log_b, 601);
    let analytic = analytic_performance(&cfg.pair, log_b, 0.5, 10_000, 602).unwrap();
    let arl = estimate_algorithm_arl(&cfg, 10_000).unwrap().estimate;
    let d1 = estimate_lorden_delay(&cfg.with_seed(603), 1, 10_000, Conditioning::WorstCase)
        .unwrap()
        .estimate;
    let z_arl = analytic.arl_alg.z_score(&arl);
    let z_d = analytic.lorden_delay.z_score(&d1);
    check(
        z_arl < 4.0 && z_d < 4.0,
        format!(
            "E_inf[N]: renewal {} vs direct {} ({z_arl:.2} SE); d_1: renewal {} vs direct {} ({z_d:.2} SE)",
            analytic.arl_alg, arl, analytic.lorden_delay, d1
        ),
    )
}

fn c07_wald_identity() -> Outcome {
    let log_b = 100f64.ln();
    let sys = estimate_system_arl(&bernoulli_cfg(0.5, 0.0, log_b, 701), 10_000).unwrap().estimate;
    let alg = estimate_algorithm_arl(&bernoulli_cfg(0.5, 0.0, log_b, 702), 10_000).unwrap().estimate;
    let scaled = alg.scaled(1.0 / 0.5);
    let z = sys.z_score(&scaled);
    check(z < 4.0, format!("E_inf[T] = {sys}; E_inf[N]/p = {scaled}; {z:.2} combined SE (< 4)"))
}

fn c08_sprt_dominance() -> Outcome {
    let pair = pair_db(0.0);
    let pmf = ArrivalPmf::bernoulli(0.5).unwrap();
    let log_b = 560f64.ln();
    let mut violations = 0;
    let mut compared = 0;
    for i in 0..10_000u64 {
        let mut rng = trial_rng(808, i);
        // censored stream: change at slot 50, trivial slots contribute 0
        let llrs: Vec<f64> = (1..=5_000u64)
            .map(|k| {
                if quickdet::energy::sample_arrival(&pmf, &mut rng) == 1 {
                    let x = quickdet::observation::sample(&pair, ChangePoint::At(50), k, &mut rng);
                    pair.log_likelihood_ratio(x)
                } else {
                    0.0
                }
            })
            .collect();
        let page = page_stop_index(&llrs, log_b);
        let sprt = sprt_stop_index(&llrs, log_b);
        match (page, sprt) {
            (Some(a), Some(b)) => {
                compared += 1;
                if a > b {
                    violations += 1;
                }
            }
            (None, Some(_)) => violations += 1,
            _ => {}
        }
    }
    check(
        violations == 0,
        format!("{violations} violations of Page <= SPRT over 10000 streams ({compared} with both stopped)"),
    )
}

fn c09_threshold_guarantee() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for gamma in [100.0f64, 1000.0] {
        let imm = estimate_system_arl(&bernoulli_cfg(0.5, 0.0, gamma.ln(), 901), 2_000).unwrap();
        let gen_cfg = TrialConfig {
            pair: pair_db(5.0),
            arrivals: paper_pmf(),
            capacity: 3,
            policy: Policy::GeneralizedImmediate,
            log_threshold: gamma.ln(),
            change_point: ChangePoint::Never,
            max_horizon: 100_000_000,
            seed: 902,
        };
        let gen = estimate_system_arl(&gen_cfg, 2_000).unwrap();
        ok &= imm.estimate.mean >= gamma && gen.estimate.mean >= gamma;
        ok &= imm.truncated_fraction == 0.0 && gen.truncated_fraction == 0.0;
        parts.push(format!(
            "gamma={gamma}: immediate {:.1}, generalized {:.1}",
            imm.estimate.mean, gen.estimate.mean
        ));
    }
    check(ok, parts.join("; "))
}

fn c10_stationary_cross_check() -> Outcome {
    let pmf = paper_pmf();
    let w = stationary_distribution(&build_transition_matrix(&pmf, 3)).unwrap();
    let rate = 1.0 - pmf.prob(0) * w[0];
    let occ = simulate_occupancy(&pmf, 3, 1_000, 1_000, 1010).unwrap();
    let mut ok = true;
    let mut zs = Vec::new();
    for (e, wi) in occ.state_fraction.iter().zip(&w) {
        let z = (e.mean - wi).abs() / e.std_error;
        ok &= z < 4.0;
        zs.push(format!("{z:.2}"));
    }
    let zr = (occ.sampling_fraction.mean - rate).abs() / occ.sampling_fraction.std_error;
    ok &= zr < 4.0;
    check(
        ok,
        format!(
            "per-state |occupancy - w| in SE: [{}]; sampling fraction {} vs 1 - p0 w0 = {rate:.5} ({zr:.2} SE)",
            zs.join(", "),
            occ.sampling_fraction
        ),
    )
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_quickdet");
    let mut outputs = Vec::new();
    for threads in ["1", "1", "4"] {
        let path = dir.path().join(format!("fig2_{}.csv", outputs.len()));
        let status = Command::new(exe)
            .args(["--preset", "fig2", "--seed", "1234", "--out"])
            .arg(&path)
            .env("QUICKDET_THREADS", threads)
            .output()
            .unwrap();
        if !status.status.success() {
            return Err(format!("quickdet exited with {:?}", status.status.code()));
        }
        outputs.push(std::fs::read(&path).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    check(
        same && !outputs[0].is_empty(),
        format!("fig2 CSV ({} bytes) identical across reruns and QUICKDET_THREADS=1/4: {same}", outputs[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: &[(&str, fn() -> Outcome)] = &[
        ("01 kl_formula", c01_kl_formula),
        ("02 equalizer", c02_equalizer),
        ("03 monotone_in_p", c03_monotone_in_p),
        ("04 asymptotic_slope", c04_asymptotic_slope),
        ("05 general_arrival_asymptote", c05_general_arrival_asymptote),
        ("06 renewal_cross_validation", c06_renewal_cross_validation),
        ("07 wald_identity", c07_wald_identity),
        ("08 sprt_dominance", c08_sprt_dominance),
        ("09 threshold_guarantee", c09_threshold_guarantee),
        ("10 stationary_cross_check", c10_stationary_cross_check),
        ("11 determinism", c11_determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|flt| name.contains(flt.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

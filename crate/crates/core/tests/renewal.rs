// SPDX-License-Identifier: MIT OR Apache-2.0

use quickdet::energy::ArrivalPmf;
use quickdet::engine::{analytic_performance, estimate_algorithm_arl, TrialConfig};
use quickdet::observation::{ChangePoint, GaussianVariancePair};
use quickdet::policy::Policy;

// Upper exits are rare at this threshold, so the stitched ARL needs many more
// excursions than the direct estimate to be informative.
#[test]
fn stitched_false_alarm_time_matches_direct_simulation() {
    let pair = GaussianVariancePair::from_snr_db(1.0, 0.0).unwrap();
    let log_b = 100f64.ln();
    let cfg = TrialConfig {
        pair,
        arrivals: ArrivalPmf::bernoulli(0.5).unwrap(),
        capacity: 1,
        policy: Policy::Immediate,
        log_threshold: log_b,
        change_point: ChangePoint::Never,
        max_horizon: 100_000_000,
        seed: 71,
    };
    let stitched = analytic_performance(&pair, log_b, 0.5, 400_000, 72).unwrap();
    let direct = estimate_algorithm_arl(&cfg, 10_000).unwrap().estimate;
    let z = stitched.arl_alg.z_score(&direct);
    assert!(z < 4.0, "stitched {} vs direct {} ({z:.2} SE)", stitched.arl_alg, direct);
    assert!(stitched.arl_alg.std_error < 0.1 * stitched.arl_alg.mean, "{}", stitched.arl_alg);
}

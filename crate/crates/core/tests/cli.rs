// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use quickdet::experiment::CSV_HEADER;

fn quickdet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quickdet"))
        .args(args)
        .current_dir(dir)
        .env("QUICKDET_THREADS", "2")
        .output()
        .unwrap()
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["--preset", "fig9"],
        &[],
        &["--preset", "fig2", "--grid", ""],
        &["--preset", "fig2", "--trials", "10"],
        &["--preset", "fig2", "--no_such_key", "1"],
        &["--preset", "fig4", "--snr_db", "-inf"],
        &["--preset", "custom", "--config", "missing.conf"],
    ];
    for args in cases {
        let out = quickdet(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn config_file_and_flags_layer_over_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sweep.conf"),
        "# small custom sweep\nsweep = p\ngrid = 0.5, 1.0\ntarget_gamma = 30\nmetrics = lorden_delay,asymptote\ntrials = 5000\n",
    )
    .unwrap();
    let out = quickdet(
        &["--preset", "custom", "--config", "sweep.conf", "--trials", "400", "--out", "sweep.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let width = CSV_HEADER.split(',').count();
    assert!(rows.iter().all(|r| r.len() == width));
    let delays: Vec<&Vec<&str>> = rows.iter().filter(|r| r[10] == "lorden_delay").collect();
    assert_eq!(delays.len(), 2);
    // command-line trials override the config file
    assert!(delays.iter().all(|r| r[13] == "400"));
    assert_eq!(delays[0][4], "0.5");
    assert!(!String::from_utf8_lossy(&out.stdout).is_empty());
}

#[test]
fn fig2_csv_has_the_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = quickdet(&["--preset", "fig2", "--trials", "500", "--out", "f2.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("f2.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).filter(|l| l.contains(",lorden_delay,")).collect();
    // two policies x five change points
    assert_eq!(rows.len(), 10);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], "fig2");
        let mean: f64 = f[11].parse().unwrap();
        let se: f64 = f[12].parse().unwrap();
        assert!(mean > 1.0 && se > 0.0, "{row}");
        let trunc: f64 = f[14].parse().unwrap();
        assert_eq!(trunc, 0.0);
    }
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = quickdet(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("usage"));
}

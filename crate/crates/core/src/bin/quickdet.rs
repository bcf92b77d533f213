// SPDX-License-Identifier: MIT OR Apache-2.0

//! `quickdet`: run a preset or a custom sweep, write CSV, print a summary.
//!
//! Exit codes: 0 success, 1 configuration error, 2 simulation error.

use std::path::PathBuf;
use std::process::ExitCode;

use quickdet::experiment::{emit_summary, run_experiment, write_csv, ExperimentSpec, Preset, Settings};
use quickdet::Error;

const USAGE: &str = "\
usage: quickdet --preset <fig2|fig3|fig4|fig5|custom> [--config FILE] [--seed N]
                [--trials N] [--out FILE] [--<key> VALUE ...]

Any config key may be given as --key value and overrides the config file.
QUICKDET_THREADS caps the worker count; results do not depend on it.";

struct Cli {
    preset: Preset,
    settings: Settings,
    out: PathBuf,
}

fn parse_args(args: &[String]) -> Result<Option<Cli>, Error> {
    let mut preset = None;
    let mut config = None;
    let mut out = None;
    let mut overrides = Settings::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        if flag == "-h" || flag == "--help" {
            return Ok(None);
        }
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("unexpected argument '{flag}'")))?;
        let value = it
            .next()
            .ok_or_else(|| Error::Config(format!("missing value for --{key}")))?;
        match key {
            "preset" => preset = Some(value.parse::<Preset>()?),
            "config" => config = Some(PathBuf::from(value)),
            "out" => out = Some(PathBuf::from(value)),
            _ => overrides.set(key, value)?,
        }
    }
    let file = match &config {
        Some(path) => Settings::load(path)?,
        None => Settings::new(),
    };
    let settings = file.merged(&overrides);
    let preset = match preset {
        Some(p) => p,
        None => settings
            .raw("preset")
            .ok_or_else(|| Error::Config("--preset is required".into()))?
            .parse()?,
    };
    let out = out
        .or_else(|| settings.raw("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("quickdet_{preset}.csv")));
    Ok(Some(Cli { preset, settings, out }))
}

fn run(args: &[String]) -> Result<(), Error> {
    let Some(cli) = parse_args(args)? else {
        println!("{USAGE}");
        return Ok(());
    };
    let spec = ExperimentSpec::new(cli.preset, &cli.settings)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QUICKDET_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("QUICKDET_THREADS must be a positive integer, got '{v}'")))?;
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| Error::Io(e.to_string()))?;

    let output = pool.install(|| run_experiment(&spec))?;
    let file = std::fs::File::create(&cli.out)?;
    write_csv(std::io::BufWriter::new(file), &output.records)?;
    print!("{}", emit_summary(&output));
    println!("wrote {} rows to {}", output.records.len(), cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_config_error() => {
            eprintln!("error: {e}\n\n{USAGE}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

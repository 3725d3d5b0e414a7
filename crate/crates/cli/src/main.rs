//! `griffith-beam <experiment> --config <path> [--out <dir>] [--seed <u64>]`
//!
//! Exit codes: 0 all checks passed, 2 at least one check failed, 1 usage or
//! runtime error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use griffith_beam::config::ExperimentConfig;
use griffith_beam::experiments;

const USAGE: &str = "usage: griffith-beam <experiment> --config <path> [--out <dir>] [--seed <u64>]
experiments: alpha | recovery | gamma-sweep | limit1d-solve | rigidity";

fn run() -> Result<bool, String> {
    let mut args = std::env::args().skip(1);
    let kind = args.next().ok_or(USAGE.to_string())?;
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir = PathBuf::from("out");
    let mut seed: Option<u64> = None;
    while let Some(flag) = args.next() {
        let mut value = |name: &str| {
            args.next()
                .ok_or_else(|| format!("{name} needs a value\n{USAGE}"))
        };
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(value("--config")?)),
            "--out" => out_dir = PathBuf::from(value("--out")?),
            "--seed" => {
                seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|_| "--seed must be an unsigned integer".to_string())?,
                )
            }
            other => return Err(format!("unknown flag {other}\n{USAGE}")),
        }
    }
    let config_path = config_path.ok_or(format!("--config is required\n{USAGE}"))?;
    let mut cfg = ExperimentConfig::load(&config_path).map_err(|e| e.to_string())?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }

    if let Ok(threads) = std::env::var("GRIFFITH_BEAM_THREADS") {
        let threads: usize = threads
            .parse()
            .map_err(|_| "GRIFFITH_BEAM_THREADS must be an unsigned integer".to_string())?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }

    let start = Instant::now();
    let outcome = experiments::run(&kind, &cfg, &out_dir)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    println!("{}: {}", kind, if outcome.pass { "PASS" } else { "FAIL" });
    eprintln!("elapsed: {:.2}s", start.elapsed().as_secs_f64());
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

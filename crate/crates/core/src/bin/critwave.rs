//! Batch runner: one scenario per invocation, configured by a flat
//! key-value file. Exit status: 0 all checks pass, 1 validation error,
//! 2 computation error, 3 check failure.

use critwave::cli::{list_scenarios, run_scenario, Config, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

fn usage() -> &'static str {
    "usage: critwave <scenario> --config PATH [--out DIR] [--quiet]\n       critwave list\n\nScenarios run from a config file whose [scenario] section names them;\nthe subcommand must match that name. `critwave list` prints the registry.\nThreads for internal sweeps honor the CRITWAVE_THREADS environment variable."
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        println!("{}", usage());
        return ExitCode::from(if args.is_empty() { 1 } else { 0 });
    }
    if args[0] == "list" {
        print!("{}", list_scenarios());
        return ExitCode::SUCCESS;
    }

    let subcommand = args[0].clone();
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir = PathBuf::from("critwave-out");
    let mut quiet = false;
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                config_path = args.get(i).map(PathBuf::from);
            }
            "--out" => {
                i += 1;
                if let Some(d) = args.get(i) {
                    out_dir = PathBuf::from(d);
                }
            }
            "--quiet" => quiet = true,
            other => {
                eprintln!("unknown flag {other}\n{}", usage());
                return ExitCode::from(1);
            }
        }
        i += 1;
    }

    if let Ok(threads) = std::env::var("CRITWAVE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .ok();
        }
    }

    let Some(config_path) = config_path else {
        eprintln!("missing --config PATH\n{}", usage());
        return ExitCode::from(1);
    };
    let config = match Config::load(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    match config.raw("scenario", "name") {
        Some(name) if name == subcommand => {}
        Some(name) => {
            eprintln!("subcommand {subcommand} does not match [scenario] name = {name}");
            return ExitCode::from(1);
        }
        None => {
            eprintln!("config is missing [scenario] name");
            return ExitCode::from(1);
        }
    }

    match run_scenario(&config, &out_dir, quiet) {
        Ok(report) => {
            if report.all_passed() {
                if !quiet {
                    println!("{}: all checks passed", report.scenario);
                }
                ExitCode::SUCCESS
            } else {
                eprintln!("{}: checks failed", report.scenario);
                ExitCode::from(3)
            }
        }
        Err(RunError::Validation(msg)) => {
            eprintln!("validation error: {msg}");
            ExitCode::from(1)
        }
        Err(RunError::Computation(msg)) => {
            eprintln!("computation error: {msg}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use datashower_cli::{run_experiment, thread_cap, validate, CliError, LoadedScenario, RunOptions, EXPERIMENTS};

/// Link capacity, data shower bulk, scheduling and protocol experiments.
#[derive(Debug, Parser)]
#[command(name = "datashower", version, after_help = experiments_help())]
struct Args {
    /// Experiment to run, or `validate` to check the scenario.
    experiment: String,
    /// Scenario TOML file. The bundled defaults are used when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Master seed; overrides the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo runs; overrides the scenario's.
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn experiments_help() -> String {
    format!("Experiments: {}", EXPERIMENTS.join(", "))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: Args) -> Result<u8, CliError> {
    if let Some(n) = thread_cap(std::env::var("DATASHOWER_THREADS").ok().as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let loaded = LoadedScenario::load(args.scenario.as_deref())?;
    if args.experiment == "validate" {
        let diags = validate::check(&loaded);
        for d in &diags {
            println!("{d}");
        }
        if diags.is_empty() {
            println!("{}: ok", loaded.origin);
            return Ok(0);
        }
        return Ok(1);
    }
    let opts = RunOptions { seed: args.seed, runs: args.runs, out: args.out };
    for path in run_experiment(&args.experiment, &loaded, &opts)? {
        println!("{}", path.display());
    }
    Ok(0)
}

//! Scenario loading, experiment orchestration and CSV output for the
//! `datashower` command.

mod error;
pub mod experiments;
pub mod fleet;
pub mod output;
pub mod scenario;
pub mod seeds;
pub mod stats;
pub mod sweep;
pub mod validate;

use std::path::{Path, PathBuf};

pub use error::{CliError, Diagnostic, Result};
pub use experiments::{Context, EXPERIMENTS};
pub use fleet::generate_fleet;
pub use scenario::{LoadedScenario, Scenario};
pub use validate::validate_scenario;

/// Command-line overrides of scenario settings.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Validates `loaded`, then runs experiment `name` once, or once per sweep
/// value into `key=value` subdirectories. Returns the files written.
pub fn run_experiment(name: &str, loaded: &LoadedScenario, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    if !EXPERIMENTS.contains(&name) {
        return Err(CliError::Usage(format!(
            "unknown experiment `{name}`; expected one of: {}, validate",
            EXPERIMENTS.join(", ")
        )));
    }
    if opts.runs == Some(0) {
        return Err(CliError::Usage("--runs must be >= 1".into()));
    }
    let diags = validate::check(loaded);
    if !diags.is_empty() {
        return Err(CliError::Invalid(diags));
    }
    let out_dir = opts
        .out
        .clone()
        .or_else(|| loaded.scenario.out_dir.as_deref().map(|p| loaded.resolve(p)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let variants = sweep::variants(loaded).map_err(|d| CliError::Invalid(vec![d]))?;
    if variants.is_empty() {
        return run_one(name, loaded.clone(), &out_dir, opts);
    }
    let mut written = Vec::new();
    for (label, v) in variants {
        written.extend(run_one(name, v, &out_dir.join(label), opts)?);
    }
    Ok(written)
}

fn run_one(name: &str, loaded: LoadedScenario, dir: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let seed = opts.seed.unwrap_or(loaded.scenario.seed);
    let runs = opts.runs.unwrap_or(loaded.scenario.runs);
    let hash = output::scenario_hash(&loaded, runs)?;
    let ctx = Context::new(loaded, seed, runs)?;
    let mut out = output::Output::new(dir, &hash, seed)?;
    experiments::run_named(name, &ctx, &mut out)?;
    Ok(out.into_written())
}

/// Worker count from the `DATASHOWER_THREADS` value, if set.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("DATASHOWER_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

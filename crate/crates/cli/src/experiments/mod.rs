//! The runnable experiments. Each writes one or more CSVs into an [`Output`].

use std::sync::Arc;

use datashower_core::channel::CapacityModel;

use crate::error::{CliError, Result};
use crate::output::Output;
use crate::scenario::{LoadedScenario, Scenario};

mod bulk;
mod channel;
mod mac;
mod schedule;

pub use schedule::{run_journeys, Journey};

pub const EXPERIMENTS: &[&str] = &[
    "state-probs-mm",
    "state-probs-thz",
    "thz-capacity-grid",
    "combined-capacity-grid",
    "bulk-vs-dmin-speed",
    "bulk-trace",
    "schedule-timeline",
    "scheduler-compare",
    "mac-session",
];

/// A validated scenario with its capacity model built.
pub struct Context {
    pub loaded: LoadedScenario,
    pub model: Arc<CapacityModel>,
    pub seed: u64,
    pub runs: usize,
}

impl Context {
    pub fn new(loaded: LoadedScenario, seed: u64, runs: usize) -> Result<Self> {
        let model = Arc::new(loaded.capacity_model()?);
        Ok(Self { loaded, model, seed, runs })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.loaded.scenario
    }
}

pub fn run_named(name: &str, ctx: &Context, out: &mut Output) -> Result<()> {
    match name {
        "state-probs-mm" => channel::state_probs_mm(ctx, out),
        "state-probs-thz" => channel::state_probs_thz(ctx, out),
        "thz-capacity-grid" => channel::thz_capacity_grid(ctx, out),
        "combined-capacity-grid" => channel::combined_capacity_grid(ctx, out),
        "bulk-vs-dmin-speed" => bulk::bulk_vs_dmin_speed(ctx, out),
        "bulk-trace" => bulk::bulk_trace(ctx, out),
        "schedule-timeline" => schedule::schedule_timeline(ctx, out),
        "scheduler-compare" => schedule::scheduler_compare(ctx, out),
        "mac-session" => mac::mac_session(ctx, out),
        other => Err(CliError::Usage(format!(
            "unknown experiment `{other}`; expected one of: {}, validate",
            EXPERIMENTS.join(", ")
        ))),
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

/// `step, 2 step, ..` up to and including `max`.
fn axis(step: f64, max: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

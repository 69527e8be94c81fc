//! Scenario files: TOML with one section per concern. Every key is optional
//! and falls back to the bundled defaults.

use std::fs;
use std::path::{Path, PathBuf};

use datashower_core::bulk::{OverheadTimes, QuadratureSteps};
use datashower_core::channel::{AbsorptionTable, CapacityModel, MmWaveParams, ThzParams};
use datashower_core::macsim::ProtocolConfig;
use datashower_core::scheduler::DEFAULT_SLOT_DURATION_S;
use datashower_core::trajectory::{StraightLinePath, TraceTrajectory, Trajectory};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const BUNDLED_SCENARIO: &str = include_str!("../scenarios/table1_defaults.toml");
pub const BUNDLED_SCENARIO_NAME: &str = "table1_defaults";
pub const BUNDLED_TRACE: &str = include_str!("../data/synthetic_pass.csv");
/// Value of `trace.file` selecting the bundled trace.
pub const BUNDLED: &str = "bundled";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub runs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub thz: ThzParams,
    pub mmwave: MmWaveParams,
    pub absorption: AbsorptionSpec,
    pub overheads: OverheadTimes,
    pub quadrature: QuadratureSpec,
    pub trace: TraceSpec,
    pub fleet: FleetSpec,
    pub scheduler: SchedulerSpec,
    pub compare: CompareSpec,
    pub protocol: ProtocolConfig,
    pub mac: MacSpec,
    pub grids: GridSpec,
    pub vehicles: Vec<VehicleSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            runs: 1000,
            out_dir: None,
            thz: ThzParams::default(),
            mmwave: MmWaveParams::default(),
            absorption: AbsorptionSpec::default(),
            overheads: OverheadTimes::default(),
            quadrature: QuadratureSpec::default(),
            trace: TraceSpec::default(),
            fleet: FleetSpec::default(),
            scheduler: SchedulerSpec::default(),
            compare: CompareSpec::default(),
            protocol: ProtocolConfig::default(),
            mac: MacSpec::default(),
            grids: GridSpec::default(),
            vehicles: Vec::new(),
            sweep: None,
        }
    }
}

/// Absorption coefficient table; `None` uses the bundled one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbsorptionSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub distance_per_sample_m: f64,
    pub eta_step_m: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        let d = QuadratureSteps::default();
        Self { distance_per_sample_m: d.distance_per_sample, eta_step_m: d.eta_step }
    }
}

impl QuadratureSpec {
    pub fn steps(&self) -> QuadratureSteps {
        QuadratureSteps { distance_per_sample: self.distance_per_sample_m, eta_step: self.eta_step_m }
    }
}

/// Route trace for the trace-based bulk experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSpec {
    /// CSV path, or `bundled`.
    pub file: String,
    /// Tower position for `t_s,x_m,y_m` traces.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tower_m: Option<[f64; 2]>,
    /// Average speeds the trace is replayed at.
    pub speeds_mps: Vec<f64>,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            file: BUNDLED.into(),
            tower_m: None,
            speeds_mps: (17..=46).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

/// Random straight-line fleet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetSpec {
    pub n_vehicles: usize,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    /// Entry times are drawn uniformly from `[0, arrival_span_s]`.
    pub arrival_span_s: f64,
    pub d_min_m: f64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        Self { n_vehicles: 5, speed_min_mps: 3.0, speed_max_mps: 7.0, arrival_span_s: 20.0, d_min_m: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Greedy,
    Optimal,
    Random,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Optimal => "optimal",
            Algorithm::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerSpec {
    pub algorithm: Algorithm,
    pub slot_duration_s: f64,
    /// Per-vehicle overhead as a fraction of the slot duration.
    pub overhead_ratio: f64,
    /// Demands are drawn uniformly from this range unless a vehicle sets its own.
    pub demand_min_bits: f64,
    pub demand_max_bits: f64,
    /// Largest search space the exhaustive scheduler may enumerate.
    pub budget: u64,
}

impl Default for SchedulerSpec {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Greedy,
            slot_duration_s: DEFAULT_SLOT_DURATION_S,
            overhead_ratio: 0.0,
            demand_min_bits: 5e12,
            demand_max_bits: 15e12,
            budget: datashower_core::scheduler::DEFAULT_ASSIGNMENT_BUDGET,
        }
    }
}

/// Optimal / greedy / random comparison over normalised overheads. The
/// fleet's speed, arrival and distance settings are shared with `[fleet]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSpec {
    pub n_vehicles: usize,
    pub slot_duration_s: f64,
    pub overhead_ratios: Vec<f64>,
    pub demand_min_bits: f64,
    pub demand_max_bits: f64,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self {
            n_vehicles: 2,
            slot_duration_s: 8.0,
            overhead_ratios: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            demand_min_bits: 5e12,
            demand_max_bits: 15e12,
        }
    }
}

/// Protocol sessions run over the first listed vehicle, or a straight pass
/// at `[fleet]` minimum distance and mid-range speed when none is listed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacSpec {
    /// Scripted losses; disables random losses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_script: Option<PathBuf>,
}

/// Axes of the curve and surface experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub mm_max_distance_m: f64,
    pub mm_distance_step_m: f64,
    pub thz_gamma_fractions: Vec<f64>,
    pub thz_probs_tx_power_dbm: f64,
    pub thz_max_distance_m: f64,
    pub thz_distance_step_m: f64,
    pub thz_tx_powers_dbm: Vec<f64>,
    pub combined_max_distance_m: f64,
    pub combined_distance_step_m: f64,
    pub d_min_m: Vec<f64>,
    pub speeds_kmh: Vec<f64>,
    pub timeline_sample_s: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            mm_max_distance_m: 250.0,
            mm_distance_step_m: 1.0,
            thz_gamma_fractions: (1..=10).map(|i| i as f64 / 10.0).collect(),
            thz_probs_tx_power_dbm: 0.0,
            thz_max_distance_m: 10.0,
            thz_distance_step_m: 0.1,
            thz_tx_powers_dbm: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            combined_max_distance_m: 200.0,
            combined_distance_step_m: 0.5,
            d_min_m: (1..=10).map(f64::from).collect(),
            speeds_kmh: (1..=10).map(f64::from).collect(),
            timeline_sample_s: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Straight,
    Trace,
}

/// An explicitly listed vehicle. Straight vehicles need `d_min_m` and
/// `speed_mps`; trace vehicles need `file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub kind: VehicleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_min_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mps: Option<f64>,
    #[serde(default)]
    pub t_enter_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tower_m: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_bits: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhead_s: Option<f64>,
}

/// Reruns the experiment once per value of one scenario key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted key, e.g. `thz.tx_power_dbm`.
    pub path: String,
    pub values: Vec<toml::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
}

/// A parsed scenario plus where it came from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// File name shown in messages.
    pub origin: String,
    pub text: String,
    /// Relative file references resolve against this directory.
    pub base_dir: PathBuf,
}

impl LoadedScenario {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_SCENARIO, BUNDLED_SCENARIO_NAME, PathBuf::from(".")).expect("bundled scenario parses")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_path(p),
            None => Ok(Self::bundled()),
        }
    }

    pub fn parse(text: &str, origin: &str, base_dir: PathBuf) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| parse_error(origin, text, &e))?;
        Ok(Self { scenario, origin: origin.to_string(), text: text.to_string(), base_dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Files the scenario reads besides itself, in a fixed order.
    pub fn referenced_files(&self) -> Vec<PathBuf> {
        let s = &self.scenario;
        let mut out = Vec::new();
        out.extend(s.absorption.file.as_deref().map(|p| self.resolve(p)));
        if s.trace.file != BUNDLED {
            out.push(self.resolve(Path::new(&s.trace.file)));
        }
        out.extend(s.mac.loss_script.as_deref().map(|p| self.resolve(p)));
        out.extend(s.vehicles.iter().filter_map(|v| v.file.as_deref()).map(|p| self.resolve(p)));
        out
    }

    pub fn capacity_model(&self) -> Result<CapacityModel> {
        let mut thz = self.scenario.thz.clone();
        if let Some(file) = &self.scenario.absorption.file {
            let path = self.resolve(file);
            thz.absorption = AbsorptionTable::from_path(&path).map_err(|e| located(&path, e))?;
        }
        Ok(CapacityModel::new(thz, self.scenario.mmwave.clone())?)
    }

    pub fn trace(&self) -> Result<TraceTrajectory> {
        let spec = &self.scenario.trace;
        let tower = spec.tower_m.map(|[x, y]| (x, y));
        if spec.file == BUNDLED {
            return Ok(TraceTrajectory::from_csv(BUNDLED_TRACE.as_bytes(), tower.or(Some((0.0, 0.0))))?);
        }
        let path = self.resolve(Path::new(&spec.file));
        TraceTrajectory::from_path(&path, tower).map_err(|e| located(&path, e))
    }

    /// Trajectories of the explicitly listed vehicles, in order.
    pub fn vehicle_trajectories(&self, d_entry: f64) -> Result<Vec<Trajectory>> {
        self.scenario
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| match v.kind {
                VehicleKind::Straight => {
                    let missing = |key: &str| {
                        CliError::Invalid(vec![crate::error::Diagnostic::new(format!("vehicles[{i}].{key}"), "required")])
                    };
                    let d_min = v.d_min_m.ok_or_else(|| missing("d_min_m"))?;
                    let speed = v.speed_mps.ok_or_else(|| missing("speed_mps"))?;
                    Ok(StraightLinePath::new(d_min, speed, d_entry)?.with_entry_time(v.t_enter_s).into())
                }
                VehicleKind::Trace => {
                    let file = v.file.as_deref().ok_or_else(|| {
                        CliError::Invalid(vec![crate::error::Diagnostic::new(format!("vehicles[{i}].file"), "required")])
                    })?;
                    let path = self.resolve(file);
                    let tower = v.tower_m.map(|[x, y]| (x, y));
                    Ok(TraceTrajectory::from_path(&path, tower).map_err(|e| located(&path, e))?.into())
                }
            })
            .collect()
    }
}

fn located(path: &Path, e: datashower_core::Error) -> CliError {
    match e {
        datashower_core::Error::Io(source) => CliError::io(path, source),
        datashower_core::Error::Parse { line, msg } => {
            CliError::Parse { file: path.display().to_string(), line, column: 1, msg }
        }
        other => other.into(),
    }
}

fn parse_error(origin: &str, text: &str, e: &toml::de::Error) -> CliError {
    let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
    CliError::Parse { file: origin.to_string(), line, column, msg: e.message().to_string() }
}

/// 1-based line and column of byte offset `at`.
pub(crate) fn line_col(text: &str, at: usize) -> (usize, usize) {
    let before = &text[..at.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_matches_defaults() {
        assert_eq!(LoadedScenario::bundled().scenario, Scenario::default());
    }

    #[test]
    fn empty_file_is_all_defaults() {
        let s = LoadedScenario::parse("", "empty", PathBuf::new()).unwrap();
        assert_eq!(s.scenario, Scenario::default());
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = "seed = 3\n\n[thz]\ntx_power = 3.0\n";
        match LoadedScenario::parse(text, "x.toml", PathBuf::new()) {
            Err(CliError::Parse { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("tx_power"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }

    #[test]
    fn bundled_trace_loads() {
        let t = LoadedScenario::bundled().trace().unwrap();
        let min = t.samples().iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        assert!((min - 5.0).abs() < 0.05, "{min}");
        assert!(t.average_speed().unwrap() > 4.0);
    }
}

use std::path::Path;

use datashower_core::channel::ThzBand;
use datashower_core::Error as CoreError;

use crate::error::{CliError, Diagnostic, Result};
use crate::scenario::{LoadedScenario, Scenario, VehicleKind, BUNDLED};
use crate::sweep;

/// Reads and checks a scenario file. Parse failures are errors; everything
/// else comes back as diagnostics, empty when the scenario is clean.
pub fn validate_scenario(path: &Path) -> Result<Vec<Diagnostic>> {
    let loaded = LoadedScenario::from_path(path)?;
    Ok(check(&loaded))
}

pub fn check(loaded: &LoadedScenario) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check_into(loaded, &mut out);
    if let Some(sw) = &loaded.scenario.sweep {
        if sw.values.is_empty() {
            out.push(Diagnostic::new("sweep.values", "must not be empty"));
        }
        if sw.runs == Some(0) {
            out.push(Diagnostic::new("sweep.runs", "must be >= 1"));
        }
        match sweep::variants(loaded) {
            Ok(variants) => {
                for (label, v) in variants {
                    let mut inner = Vec::new();
                    check_into(&v, &mut inner);
                    out.extend(inner.into_iter().map(|d| Diagnostic::new(d.path, format!("{} (sweep {label})", d.message))));
                }
            }
            Err(d) => out.push(d),
        }
    }
    out.dedup();
    out
}

fn check_into(loaded: &LoadedScenario, out: &mut Vec<Diagnostic>) {
    let s = &loaded.scenario;
    if s.runs < 1 {
        out.push(Diagnostic::new("runs", "must be >= 1"));
    }
    check_channel(loaded, out);
    check_numbers(s, out);

    if let Err(e) = s.overheads.validate() {
        out.push(core_diag("overheads", e));
    }
    if let Err(e) = s.protocol.validate() {
        out.push(core_diag("protocol", e));
    }

    if s.trace.file != BUNDLED {
        let p = loaded.resolve(Path::new(&s.trace.file));
        if !p.is_file() {
            out.push(Diagnostic::new("trace.file", format!("file not found: {}", p.display())));
        } else if let Err(e) = loaded.trace() {
            out.push(Diagnostic::new("trace.file", e.to_string()));
        }
    }

    if let Some(f) = &s.mac.loss_script {
        let p = loaded.resolve(f);
        if !p.is_file() {
            out.push(Diagnostic::new("mac.loss_script", format!("file not found: {}", p.display())));
        }
    }
    for (i, &d) in s.grids.d_min_m.iter().enumerate() {
        if d >= s.mmwave.d_th_m {
            out.push(Diagnostic::new(
                format!("grids.d_min_m[{i}]"),
                format!("never comes within mmwave.d_th_m ({d} >= {})", s.mmwave.d_th_m),
            ));
        }
    }

    for (i, v) in s.vehicles.iter().enumerate() {
        let at = |key: &str| format!("vehicles[{i}].{key}");
        match v.kind {
            VehicleKind::Straight => {
                match v.d_min_m {
                    None => out.push(Diagnostic::new(at("d_min_m"), "required for straight vehicles")),
                    Some(d) if !(d >= 0.0 && d.is_finite()) => {
                        out.push(Diagnostic::new(at("d_min_m"), format!("must be >= 0, got {d}")))
                    }
                    Some(d) if d >= s.mmwave.d_th_m => out.push(Diagnostic::new(
                        at("d_min_m"),
                        format!("never comes within mmwave.d_th_m ({d} >= {})", s.mmwave.d_th_m),
                    )),
                    _ => {}
                }
                match v.speed_mps {
                    None => out.push(Diagnostic::new(at("speed_mps"), "required for straight vehicles")),
                    Some(x) if !(x > 0.0 && x.is_finite()) => {
                        out.push(Diagnostic::new(at("speed_mps"), format!("must be positive, got {x}")))
                    }
                    _ => {}
                }
                if !v.t_enter_s.is_finite() {
                    out.push(Diagnostic::new(at("t_enter_s"), "must be finite"));
                }
            }
            VehicleKind::Trace => match &v.file {
                None => out.push(Diagnostic::new(at("file"), "required for trace vehicles")),
                Some(f) => {
                    let p = loaded.resolve(f);
                    if !p.is_file() {
                        out.push(Diagnostic::new(at("file"), format!("file not found: {}", p.display())));
                    }
                }
            },
        }
        if let Some(d) = v.demand_bits {
            if !(d > 0.0 && d.is_finite()) {
                out.push(Diagnostic::new(at("demand_bits"), format!("must be positive, got {d}")));
            }
        }
        if let Some(o) = v.overhead_s {
            if !(o >= 0.0 && o.is_finite()) {
                out.push(Diagnostic::new(at("overhead_s"), format!("must be >= 0, got {o}")));
            }
        }
    }
}

fn check_channel(loaded: &LoadedScenario, out: &mut Vec<Diagnostic>) {
    let s = &loaded.scenario;
    let before = out.len();
    if let Err(e) = s.thz.validate() {
        out.push(core_diag("thz", e));
    }
    if let Err(e) = s.mmwave.validate() {
        out.push(core_diag("mmwave", e));
    }
    if s.thz.d_th_m.partial_cmp(&s.mmwave.d_th_m) != Some(std::cmp::Ordering::Less) {
        out.push(Diagnostic::new(
            "thz.d_th_m, mmwave.d_th_m",
            format!("THz range must end before mmWave range ({} >= {})", s.thz.d_th_m, s.mmwave.d_th_m),
        ));
    }
    if let Some(f) = &s.absorption.file {
        let p = loaded.resolve(f);
        if !p.is_file() {
            out.push(Diagnostic::new("absorption.file", format!("file not found: {}", p.display())));
            return;
        }
    }
    if out.len() > before {
        return;
    }
    // remaining failures come from the absorption table against the band
    match loaded.capacity_model() {
        Ok(_) => {}
        Err(CliError::Core(e @ CoreError::Extrapolation { .. })) => {
            out.push(Diagnostic::new("absorption.file", e.to_string()))
        }
        Err(CliError::Core(e)) => out.push(core_diag("thz", e)),
        Err(e) => out.push(Diagnostic::new("absorption.file", e.to_string())),
    }
    for (i, &p) in s.grids.thz_tx_powers_dbm.iter().enumerate() {
        let mut thz = s.thz.clone();
        thz.tx_power_dbm = p;
        if let Err(e) = ThzBand::new(&thz) {
            out.push(Diagnostic::new(format!("grids.thz_tx_powers_dbm[{i}]"), e.to_string()));
        }
    }
}

fn check_numbers(s: &Scenario, out: &mut Vec<Diagnostic>) {
    let mut positive = |path: &str, v: f64| {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Diagnostic::new(path, format!("must be positive, got {v}")));
        }
    };
    positive("quadrature.distance_per_sample_m", s.quadrature.distance_per_sample_m);
    positive("quadrature.eta_step_m", s.quadrature.eta_step_m);
    positive("fleet.speed_min_mps", s.fleet.speed_min_mps);
    positive("fleet.speed_max_mps", s.fleet.speed_max_mps);
    positive("scheduler.slot_duration_s", s.scheduler.slot_duration_s);
    positive("scheduler.demand_min_bits", s.scheduler.demand_min_bits);
    positive("scheduler.demand_max_bits", s.scheduler.demand_max_bits);
    positive("compare.slot_duration_s", s.compare.slot_duration_s);
    positive("compare.demand_min_bits", s.compare.demand_min_bits);
    positive("compare.demand_max_bits", s.compare.demand_max_bits);
    positive("grids.mm_max_distance_m", s.grids.mm_max_distance_m);
    positive("grids.mm_distance_step_m", s.grids.mm_distance_step_m);
    positive("grids.thz_max_distance_m", s.grids.thz_max_distance_m);
    positive("grids.thz_distance_step_m", s.grids.thz_distance_step_m);
    positive("grids.combined_max_distance_m", s.grids.combined_max_distance_m);
    positive("grids.combined_distance_step_m", s.grids.combined_distance_step_m);
    positive("grids.timeline_sample_s", s.grids.timeline_sample_s);
    for (i, &v) in s.trace.speeds_mps.iter().enumerate() {
        positive(&format!("trace.speeds_mps[{i}]"), v);
    }
    for (i, &v) in s.grids.speeds_kmh.iter().enumerate() {
        positive(&format!("grids.speeds_kmh[{i}]"), v);
    }
    for (i, &v) in s.grids.thz_gamma_fractions.iter().enumerate() {
        if !(v > 0.0 && v <= 1.0) {
            out.push(Diagnostic::new(format!("grids.thz_gamma_fractions[{i}]"), format!("must lie in (0, 1], got {v}")));
        }
    }
    for (i, &v) in s.grids.d_min_m.iter().enumerate() {
        if !(v >= 0.0 && v.is_finite()) {
            out.push(Diagnostic::new(format!("grids.d_min_m[{i}]"), format!("must be >= 0, got {v}")));
        }
    }
    for (i, &v) in s.compare.overhead_ratios.iter().enumerate() {
        if !(v >= 0.0 && v.is_finite()) {
            out.push(Diagnostic::new(format!("compare.overhead_ratios[{i}]"), format!("must be >= 0, got {v}")));
        }
    }
    let non_empty = [
        ("trace.speeds_mps", s.trace.speeds_mps.is_empty()),
        ("compare.overhead_ratios", s.compare.overhead_ratios.is_empty()),
        ("grids.thz_gamma_fractions", s.grids.thz_gamma_fractions.is_empty()),
        ("grids.thz_tx_powers_dbm", s.grids.thz_tx_powers_dbm.is_empty()),
        ("grids.d_min_m", s.grids.d_min_m.is_empty()),
        ("grids.speeds_kmh", s.grids.speeds_kmh.is_empty()),
    ];
    for (path, empty) in non_empty {
        if empty {
            out.push(Diagnostic::new(path, "must not be empty"));
        }
    }

    if s.fleet.n_vehicles < 1 {
        out.push(Diagnostic::new("fleet.n_vehicles", "must be >= 1"));
    }
    if s.compare.n_vehicles < 1 {
        out.push(Diagnostic::new("compare.n_vehicles", "must be >= 1"));
    }
    if s.fleet.speed_min_mps > s.fleet.speed_max_mps {
        out.push(Diagnostic::new("fleet.speed_min_mps, fleet.speed_max_mps", "minimum exceeds maximum"));
    }
    if !(s.fleet.arrival_span_s >= 0.0 && s.fleet.arrival_span_s.is_finite()) {
        out.push(Diagnostic::new("fleet.arrival_span_s", "must be >= 0"));
    }
    if !(s.fleet.d_min_m >= 0.0 && s.fleet.d_min_m < s.mmwave.d_th_m) {
        out.push(Diagnostic::new(
            "fleet.d_min_m",
            format!("must lie in [0, mmwave.d_th_m), got {}", s.fleet.d_min_m),
        ));
    }
    if s.scheduler.demand_min_bits > s.scheduler.demand_max_bits {
        out.push(Diagnostic::new("scheduler.demand_min_bits, scheduler.demand_max_bits", "minimum exceeds maximum"));
    }
    if s.compare.demand_min_bits > s.compare.demand_max_bits {
        out.push(Diagnostic::new("compare.demand_min_bits, compare.demand_max_bits", "minimum exceeds maximum"));
    }
    if !(s.scheduler.overhead_ratio >= 0.0 && s.scheduler.overhead_ratio.is_finite()) {
        out.push(Diagnostic::new("scheduler.overhead_ratio", "must be >= 0"));
    }
    if s.scheduler.budget < 1 {
        out.push(Diagnostic::new("scheduler.budget", "must be >= 1"));
    }
}

/// Places a core parameter error under `section` unless its name already
/// carries a section.
fn core_diag(section: &str, e: CoreError) -> Diagnostic {
    match e {
        CoreError::InvalidParam { name, reason } => {
            let path = if name.contains('.') { name.to_string() } else { format!("{section}.{name}") };
            Diagnostic::new(path, reason)
        }
        other => Diagnostic::new(section, other.to_string()),
    }
}

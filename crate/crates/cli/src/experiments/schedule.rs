use std::sync::Arc;

use datashower_core::channel::CapacityProfile;
use datashower_core::scheduler::{
    build_slot_grid_with, schedule_greedy, schedule_optimal, schedule_random, Demands, Schedule, SlotGrid,
    VehicleDemand,
};
use datashower_core::trajectory::Trajectory;
use rand::Rng;
use rayon::prelude::*;

use super::{num, Context};
use crate::error::Result;
use crate::fleet::{generate_fleet, uniform};
use crate::output::Output;
use crate::scenario::{Algorithm, FleetSpec};
use crate::seeds::substream;
use crate::stats::summarize;

/// One journey's grid and its schedule.
pub struct Journey {
    pub grid: SlotGrid,
    pub schedule: Schedule,
}

/// Schedules the journeys in order. Bits a vehicle receives in one journey
/// are taken off its demand for the later ones.
pub fn run_journeys<F>(grids: Vec<SlotGrid>, demands: &Demands, mut schedule: F) -> Result<Vec<Journey>>
where
    F: FnMut(usize, &SlotGrid, &Demands) -> datashower_core::Result<Schedule>,
{
    let mut current = demands.clone();
    let mut out = Vec::with_capacity(grids.len());
    for (j, grid) in grids.into_iter().enumerate() {
        let s = schedule(j, &grid, &current)?;
        current = Demands::new(current.iter().map(|d| VehicleDemand {
            demand_bits: (d.demand_bits - s.delivered.get(d.vehicle_id).copied().unwrap_or(0.0)).max(0.0),
            ..*d
        }))?;
        out.push(Journey { grid, schedule: s });
    }
    Ok(out)
}

fn total(journeys: &[Journey]) -> f64 {
    journeys.iter().map(|j| j.schedule.total).sum()
}

fn schedule_with<R: Rng + ?Sized>(
    algorithm: Algorithm,
    budget: u64,
    grid: &SlotGrid,
    demands: &Demands,
    rng: &mut R,
) -> datashower_core::Result<Schedule> {
    match algorithm {
        Algorithm::Greedy => schedule_greedy(grid, demands, rng),
        Algorithm::Optimal => schedule_optimal(grid, demands, budget),
        Algorithm::Random => schedule_random(grid, demands, rng),
    }
}

/// Fleet distances and the per-slot schedule of one realisation.
pub(super) fn schedule_timeline(ctx: &Context, out: &mut Output) -> Result<()> {
    let s = ctx.scenario();
    let sch = &s.scheduler;
    let d_th = ctx.model.mmwave().d_th_m;
    let trajectories: Vec<Trajectory> = if s.vehicles.is_empty() {
        let mut rng = substream(ctx.seed, "schedule-timeline/fleet", 0);
        generate_fleet(&s.fleet, d_th, &mut rng)?.into_iter().map(Into::into).collect()
    } else {
        ctx.loaded.vehicle_trajectories(d_th)?
    };
    let mut rng = substream(ctx.seed, "schedule-timeline/demands", 0);
    let demands = Demands::new((0..trajectories.len()).map(|v| {
        let drawn = uniform(&mut rng, sch.demand_min_bits, sch.demand_max_bits);
        let spec = s.vehicles.get(v);
        VehicleDemand {
            vehicle_id: v,
            demand_bits: spec.and_then(|x| x.demand_bits).unwrap_or(drawn),
            overhead_s: spec.and_then(|x| x.overhead_s).unwrap_or(sch.overhead_ratio * sch.slot_duration_s),
        }
    }))?;

    let (lo, hi) = trajectories
        .iter()
        .map(Trajectory::span)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (s, e)| (a.min(s), b.max(e)));
    let dt = s.grids.timeline_sample_s;
    let mut dist_rows = Vec::new();
    for i in 0..=((hi - lo) / dt).floor() as usize {
        let t = lo + i as f64 * dt;
        for (v, tr) in trajectories.iter().enumerate() {
            let (a, b) = tr.span();
            if t >= a && t <= b {
                dist_rows.push(vec![num(t), v.to_string(), num(tr.distance_at(t)?)]);
            }
        }
    }
    out.write("fleet_distance.csv", &["t_s", "vehicle_id", "d_m"], &dist_rows)?;

    let model: Arc<dyn CapacityProfile> = ctx.model.clone();
    let grids = build_slot_grid_with(trajectories.clone(), model, sch.slot_duration_s, s.quadrature.steps())?;
    let journeys = run_journeys(grids, &demands, |j, g, d| {
        schedule_with(sch.algorithm, sch.budget, g, d, &mut substream(ctx.seed, "schedule-timeline/scheduler", j as u64))
    })?;

    let mut rows = Vec::new();
    for j in &journeys {
        let sc = &j.schedule;
        for k in 0..sc.assignment.len() {
            rows.push(vec![
                (j.grid.first_slot() + k as i64).to_string(),
                num(j.grid.slot_start(k)),
                sc.assignment[k].map(|v| v.to_string()).unwrap_or_default(),
                num(sc.slot_bits[k]),
                u8::from(sc.switched[k]).to_string(),
            ]);
        }
    }
    out.write("schedule_timeline.csv", &["slot_index", "t_start_s", "vehicle_id", "bits", "switched"], &rows)?;

    let mut summary = Vec::new();
    for d in demands.iter() {
        let v = d.vehicle_id;
        let delivered: f64 = journeys.iter().map(|j| j.schedule.delivered.get(v).copied().unwrap_or(0.0)).sum();
        let slots: usize = journeys.iter().map(|j| j.schedule.assignment.iter().filter(|a| **a == Some(v)).count()).sum();
        let switch_ins: usize = journeys
            .iter()
            .map(|j| j.schedule.assignment.iter().zip(&j.schedule.switched).filter(|(a, sw)| **a == Some(v) && **sw).count())
            .sum();
        summary.push(vec![
            v.to_string(),
            num(d.demand_bits),
            num(d.overhead_s),
            num(delivered),
            slots.to_string(),
            switch_ins.to_string(),
        ]);
    }
    out.write(
        "schedule_summary.csv",
        &["vehicle_id", "demand_bits", "overhead_s", "delivered_bits", "slots", "switch_ins"],
        &summary,
    )?;
    Ok(())
}

const ALGORITHMS: [Algorithm; 3] = [Algorithm::Optimal, Algorithm::Greedy, Algorithm::Random];

/// Total counted bits of the three schedulers over normalised overheads.
pub(super) fn scheduler_compare(ctx: &Context, out: &mut Output) -> Result<()> {
    let s = ctx.scenario();
    let c = &s.compare;
    let slot = c.slot_duration_s;
    let budget = s.scheduler.budget;
    let d_th = ctx.model.mmwave().d_th_m;
    let fleet = FleetSpec { n_vehicles: c.n_vehicles, ..s.fleet };
    let model: Arc<dyn CapacityProfile> = ctx.model.clone();

    let per_run = (0..ctx.runs as u64)
        .into_par_iter()
        .map(|r| -> Result<(usize, Vec<[f64; 3]>)> {
            let mut rng = substream(ctx.seed, "scheduler-compare/instance", r);
            let trajectories: Vec<Trajectory> =
                generate_fleet(&fleet, d_th, &mut rng)?.into_iter().map(Into::into).collect();
            let bits: Vec<f64> =
                (0..c.n_vehicles).map(|_| uniform(&mut rng, c.demand_min_bits, c.demand_max_bits)).collect();
            let grids = build_slot_grid_with(trajectories, model.clone(), slot, s.quadrature.steps())?;
            let slots = grids.iter().map(SlotGrid::len).sum();
            let mut totals = Vec::with_capacity(c.overhead_ratios.len());
            for (i, &ratio) in c.overhead_ratios.iter().enumerate() {
                let demands = Demands::new(bits.iter().enumerate().map(|(v, &b)| VehicleDemand {
                    vehicle_id: v,
                    demand_bits: b,
                    overhead_s: ratio * slot,
                }))?;
                let mut row = [0.0; 3];
                for (a, alg) in ALGORITHMS.iter().enumerate() {
                    let label = format!("scheduler-compare/{}/{i}", alg.as_str());
                    let mut rng = substream(ctx.seed, &label, r);
                    row[a] = total(&run_journeys(grids.clone(), &demands, |_, g, d| {
                        schedule_with(*alg, budget, g, d, &mut rng)
                    })?);
                }
                totals.push(row);
            }
            Ok((slots, totals))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut raw = Vec::new();
    for (r, (slots, totals)) in per_run.iter().enumerate() {
        for (i, t) in totals.iter().enumerate() {
            raw.push(vec![
                r.to_string(),
                num(c.overhead_ratios[i]),
                num(t[0]),
                num(t[1]),
                num(t[2]),
                slots.to_string(),
            ]);
        }
    }
    let mut rows = Vec::new();
    for (a, alg) in ALGORITHMS.iter().enumerate() {
        for (i, &ratio) in c.overhead_ratios.iter().enumerate() {
            let xs: Vec<f64> = per_run.iter().map(|(_, t)| t[i][a]).collect();
            let m = summarize(&xs);
            rows.push(vec![
                alg.as_str().to_string(),
                num(ratio),
                m.n.to_string(),
                num(m.mean),
                num(m.std),
                num(m.ci95_low),
                num(m.ci95_high),
            ]);
        }
    }
    out.write(
        "scheduler_compare.csv",
        &["algorithm", "overhead_ratio", "runs", "mean_bits", "std_bits", "ci95_low_bits", "ci95_high_bits"],
        &rows,
    )?;
    out.write(
        "scheduler_compare_runs.csv",
        &["run", "overhead_ratio", "optimal_bits", "greedy_bits", "random_bits", "slots"],
        &raw,
    )?;
    Ok(())
}

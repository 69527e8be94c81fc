//! Sharing one tower among several vehicles on a slot grid.
//!
//! [`build_slot_grid`] discretises the horizon and computes, for every slot
//! and every vehicle in range for the whole slot, the overhead-free bits
//! ñ. Empty slots separate journeys, so one call can return several
//! independent grids. The three schedulers ([`schedule_greedy`],
//! [`schedule_optimal`], [`schedule_random`]) all return a [`Schedule`]
//! evaluated with the same accounting: a vehicle switched in at slot k pays
//! its overhead at the start of the slot, and its counted bits never exceed
//! its remaining demand.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bulk::{integrate_capacity, QuadratureSteps};
use crate::channel::CapacityProfile;
use crate::trajectory::Trajectory;
use crate::{Error, Result};

mod greedy;
mod io;
mod optimal;
mod random;

pub use greedy::{schedule_greedy, schedule_greedy_traced, GreedyTrace};
pub use io::{read_demands, read_instance, write_demands, write_instance, write_schedule_csv};
pub use optimal::{assignment_count, schedule_optimal, DEFAULT_ASSIGNMENT_BUDGET};
pub use random::schedule_random;

/// Slot length used when a scenario does not set one.
pub const DEFAULT_SLOT_DURATION_S: f64 = 0.0865;

/// Vehicles and the capacity model that produced a grid, kept so that
/// overhead-shortened slots can be re-integrated exactly.
pub struct FleetChannel {
    pub trajectories: Vec<Trajectory>,
    pub model: Arc<dyn CapacityProfile>,
    pub steps: QuadratureSteps,
}

impl std::fmt::Debug for FleetChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FleetChannel").field("vehicles", &self.trajectories.len()).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum SlotSource {
    /// Capacity assumed flat within a slot: a slot shortened by `T_O`
    /// carries `ñ·(T − T_O)/T`.
    Uniform,
    Trajectories(Arc<FleetChannel>),
}

/// One journey: a run of consecutive non-empty slots.
#[derive(Debug, Clone)]
pub struct SlotGrid {
    slot_duration: f64,
    first_slot: i64,
    candidates: Vec<Vec<usize>>,
    n_tilde: Vec<Vec<f64>>,
    source: SlotSource,
}

impl SlotGrid {
    /// Grid from an explicit matrix. `rows[k][v]` is ñ for vehicle `v` in
    /// slot `k`, or `None` when the vehicle is not a candidate.
    pub fn from_matrix(slot_duration: f64, first_slot: i64, rows: &[Vec<Option<f64>>]) -> Result<Self> {
        if !(slot_duration > 0.0 && slot_duration.is_finite()) {
            return Err(Error::param("slot_duration", format!("must be positive, got {slot_duration}")));
        }
        if rows.is_empty() {
            return Err(Error::param("n_tilde", "grid needs at least one slot"));
        }
        let mut candidates = Vec::with_capacity(rows.len());
        let mut n_tilde = Vec::with_capacity(rows.len());
        for (k, row) in rows.iter().enumerate() {
            let mut c = Vec::new();
            let mut n = Vec::new();
            for (v, cell) in row.iter().enumerate() {
                if let Some(bits) = *cell {
                    if !(bits >= 0.0 && bits.is_finite()) {
                        return Err(Error::param("n_tilde", format!("slot {k}, vehicle {v}: {bits} is not a bit count")));
                    }
                    c.push(v);
                    n.push(bits);
                }
            }
            if c.is_empty() {
                return Err(Error::param("n_tilde", format!("slot {k} has no candidate")));
            }
            candidates.push(c);
            n_tilde.push(n);
        }
        Ok(Self { slot_duration, first_slot, candidates, n_tilde, source: SlotSource::Uniform })
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    /// Global index of the first slot (slot `k` starts at `k·T`).
    pub fn first_slot(&self) -> i64 {
        self.first_slot
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn source(&self) -> &SlotSource {
        &self.source
    }

    pub fn slot_start(&self, k: usize) -> f64 {
        (self.first_slot + k as i64) as f64 * self.slot_duration
    }

    pub fn candidates(&self, k: usize) -> &[usize] {
        &self.candidates[k]
    }

    /// Vehicles appearing anywhere in the grid, ascending.
    pub fn vehicles(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.candidates.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Overhead-free bits for `v` in slot `k`, `None` if `v` is not a candidate.
    pub fn n_tilde(&self, k: usize, v: usize) -> Option<f64> {
        let pos = self.candidates.get(k)?.iter().position(|&c| c == v)?;
        Some(self.n_tilde[k][pos])
    }

    /// Candidate/ñ pairs of slot `k`.
    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.candidates[k].iter().copied().zip(self.n_tilde[k].iter().copied())
    }

    /// Bits for `v` in slot `k` when it is switched in and spends `overhead`
    /// seconds establishing the link.
    pub fn fresh_bits(&self, k: usize, v: usize, overhead: f64) -> Result<f64> {
        let full = self.n_tilde(k, v).ok_or(Error::domain("vehicle not a candidate in slot", k as f64))?;
        if overhead <= 0.0 {
            return Ok(full);
        }
        let t = self.slot_duration;
        if overhead >= t {
            return Ok(0.0);
        }
        match &self.source {
            SlotSource::Uniform => Ok(full * (t - overhead) / t),
            SlotSource::Trajectories(fleet) => {
                let t0 = self.slot_start(k);
                integrate_capacity(&fleet.trajectories[v], fleet.model.as_ref(), t0 + overhead, t0 + t, fleet.steps)
            }
        }
    }

    /// Precomputes continuation and switch-in bits for every candidate.
    pub fn bit_table(&self, demands: &Demands) -> Result<BitTable> {
        let rows = (0..self.len())
            .map(|k| {
                self.row(k)
                    .map(|(v, full)| {
                        let d = demands.get(v).ok_or(Error::param("demands", format!("no demand for vehicle {v}")))?;
                        Ok(Cell { vehicle: v, full, fresh: self.fresh_bits(k, v, d.overhead_s)? })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitTable { rows })
    }
}

/// Splits the horizon covered by `trajectories` into slots of
/// `slot_duration` and returns one grid per journey. A vehicle is a
/// candidate in a slot only if it stays within the mmWave threshold for the
/// whole slot.
pub fn build_slot_grid(
    trajectories: Vec<Trajectory>,
    model: Arc<dyn CapacityProfile>,
    slot_duration: f64,
) -> Result<Vec<SlotGrid>> {
    build_slot_grid_with(trajectories, model, slot_duration, QuadratureSteps::default())
}

pub fn build_slot_grid_with(
    trajectories: Vec<Trajectory>,
    model: Arc<dyn CapacityProfile>,
    slot_duration: f64,
    steps: QuadratureSteps,
) -> Result<Vec<SlotGrid>> {
    if trajectories.is_empty() {
        return Err(Error::param("trajectories", "need at least one vehicle"));
    }
    if !(slot_duration > 0.0 && slot_duration.is_finite()) {
        return Err(Error::param("slot_duration", format!("must be positive, got {slot_duration}")));
    }
    let (lo, hi) = trajectories
        .iter()
        .map(Trajectory::span)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (s, e)| (a.min(s), b.max(e)));
    let k_lo = (lo / slot_duration).ceil() as i64;
    let k_hi = (hi / slot_duration).floor() as i64; // exclusive end slot
    if k_hi <= k_lo {
        return Ok(vec![]);
    }
    let d_max = model.mm_threshold();
    let cells: Vec<Result<Vec<(usize, f64)>>> = (k_lo..k_hi)
        .into_par_iter()
        .map(|k| {
            let t0 = k as f64 * slot_duration;
            let t1 = t0 + slot_duration;
            let mut row = Vec::new();
            for (v, traj) in trajectories.iter().enumerate() {
                let (s, e) = traj.span();
                if t0 < s || t1 > e || traj.max_distance_over(t0, t1) > d_max {
                    continue;
                }
                row.push((v, integrate_capacity(traj, model.as_ref(), t0, t1, steps)?));
            }
            Ok(row)
        })
        .collect();

    let fleet = Arc::new(FleetChannel { trajectories, model, steps });
    let mut grids = Vec::new();
    let mut current: Option<SlotGrid> = None;
    for (i, row) in cells.into_iter().enumerate() {
        let row = row?;
        if row.is_empty() {
            grids.extend(current.take());
            continue;
        }
        let g = current.get_or_insert_with(|| SlotGrid {
            slot_duration,
            first_slot: k_lo + i as i64,
            candidates: vec![],
            n_tilde: vec![],
            source: SlotSource::Trajectories(fleet.clone()),
        });
        g.candidates.push(row.iter().map(|c| c.0).collect());
        g.n_tilde.push(row.iter().map(|c| c.1).collect());
    }
    grids.extend(current);
    Ok(grids)
}

/// What a vehicle wants from one journey.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VehicleDemand {
    pub vehicle_id: usize,
    pub demand_bits: f64,
    pub overhead_s: f64,
}

impl VehicleDemand {
    pub fn validate(&self) -> Result<()> {
        if !(self.demand_bits >= 0.0 && self.demand_bits.is_finite()) {
            return Err(Error::param("demand_bits", format!("vehicle {}: {}", self.vehicle_id, self.demand_bits)));
        }
        if !(self.overhead_s >= 0.0 && self.overhead_s.is_finite()) {
            return Err(Error::param("overhead_s", format!("vehicle {}: {}", self.vehicle_id, self.overhead_s)));
        }
        Ok(())
    }
}

/// Demands indexed by vehicle id.
#[derive(Debug, Clone, Default)]
pub struct Demands {
    by_id: Vec<Option<VehicleDemand>>,
}

impl Demands {
    pub fn new(list: impl IntoIterator<Item = VehicleDemand>) -> Result<Self> {
        let mut by_id: Vec<Option<VehicleDemand>> = Vec::new();
        for d in list {
            d.validate()?;
            if by_id.len() <= d.vehicle_id {
                by_id.resize(d.vehicle_id + 1, None);
            }
            if by_id[d.vehicle_id].replace(d).is_some() {
                return Err(Error::param("demands", format!("vehicle {} listed twice", d.vehicle_id)));
            }
        }
        Ok(Self { by_id })
    }

    /// Same demand and overhead for vehicles `0..n`.
    pub fn uniform(n: usize, demand_bits: f64, overhead_s: f64) -> Result<Self> {
        Self::new((0..n).map(|vehicle_id| VehicleDemand { vehicle_id, demand_bits, overhead_s }))
    }

    pub fn get(&self, v: usize) -> Option<&VehicleDemand> {
        self.by_id.get(v).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = &VehicleDemand> {
        self.by_id.iter().flatten()
    }

    pub(crate) fn remaining(&self) -> Vec<f64> {
        self.by_id.iter().map(|d| d.map_or(0.0, |d| d.demand_bits)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub vehicle: usize,
    /// ñ: the whole slot.
    pub full: f64,
    /// The slot minus the vehicle's overhead.
    pub fresh: f64,
}

impl Cell {
    fn bits(&self, switched: bool) -> f64 {
        if switched {
            self.fresh
        } else {
            self.full
        }
    }
}

/// Per-slot candidate bits for one grid and one demand set.
#[derive(Debug, Clone)]
pub struct BitTable {
    rows: Vec<Vec<Cell>>,
}

impl BitTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, k: usize) -> &[Cell] {
        &self.rows[k]
    }

    pub fn cell(&self, k: usize, v: usize) -> Option<&Cell> {
        self.rows.get(k)?.iter().find(|c| c.vehicle == v)
    }
}

/// Bits `v` exchanges in slot `k` given the assignment of slot `k − 1`.
pub fn slot_bits(grid: &SlotGrid, demands: &Demands, k: usize, v: usize, previous: Option<usize>) -> Result<f64> {
    let d = demands.get(v).ok_or(Error::param("demands", format!("no demand for vehicle {v}")))?;
    if previous == Some(v) {
        grid.n_tilde(k, v).ok_or(Error::domain("vehicle not a candidate in slot", k as f64))
    } else {
        grid.fresh_bits(k, v, d.overhead_s)
    }
}

/// An assignment with its accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Vehicle per slot; `None` for slots dropped because every candidate
    /// was already satisfied.
    pub assignment: Vec<Option<usize>>,
    /// Whether the slot's vehicle was switched in (paid its overhead).
    pub switched: Vec<bool>,
    /// Counted bits per slot after demand capping.
    pub slot_bits: Vec<f64>,
    /// Counted bits per vehicle id.
    pub delivered: Vec<f64>,
    pub total: f64,
}

impl Schedule {
    pub fn switches(&self) -> usize {
        self.assignment.windows(2).filter(|w| w[1].is_some() && w[0].is_some() && w[0] != w[1]).count()
    }
}

/// Evaluates `assignment` in slot order, capping each vehicle at its demand.
pub fn evaluate_assignment(table: &BitTable, demands: &Demands, assignment: &[Option<usize>]) -> Result<Schedule> {
    if assignment.len() != table.len() {
        return Err(Error::param("assignment", format!("{} slots, grid has {}", assignment.len(), table.len())));
    }
    let mut remaining = demands.remaining();
    let mut delivered = vec![0.0; remaining.len()];
    let mut switched = Vec::with_capacity(assignment.len());
    let mut slot_bits = Vec::with_capacity(assignment.len());
    let mut prev = None;
    for (k, a) in assignment.iter().enumerate() {
        match *a {
            None => {
                switched.push(false);
                slot_bits.push(0.0);
            }
            Some(v) => {
                let cell = table.cell(k, v).ok_or(Error::domain("vehicle not a candidate in slot", k as f64))?;
                let sw = prev != Some(v);
                let counted = cell.bits(sw).min(remaining[v]);
                remaining[v] -= counted;
                delivered[v] += counted;
                switched.push(sw);
                slot_bits.push(counted);
            }
        }
        prev = *a;
    }
    let total = delivered.iter().sum();
    Ok(Schedule { assignment: assignment.to_vec(), switched, slot_bits, delivered, total })
}

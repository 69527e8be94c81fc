use rand::Rng;

use super::{evaluate_assignment, Demands, Schedule, SlotGrid};
use crate::Result;

/// Baseline: each slot, in order, goes to a uniformly drawn candidate whose
/// counted bits have not yet met its demand.
pub fn schedule_random<R: Rng + ?Sized>(grid: &SlotGrid, demands: &Demands, rng: &mut R) -> Result<Schedule> {
    let table = grid.bit_table(demands)?;
    let mut remaining = demands.remaining();
    let mut assignment = Vec::with_capacity(table.len());
    let mut prev = None;
    for k in 0..table.len() {
        let open: Vec<_> = table.row(k).iter().filter(|c| remaining[c.vehicle] > 0.0).collect();
        let pick = match open.len() {
            0 => None,
            1 => Some(open[0]),
            n => Some(open[rng.random_range(0..n)]),
        };
        if let Some(c) = pick {
            let bits = c.bits(prev != Some(c.vehicle));
            remaining[c.vehicle] -= bits.min(remaining[c.vehicle]);
        }
        prev = pick.map(|c| c.vehicle);
        assignment.push(prev);
    }
    evaluate_assignment(&table, demands, &assignment)
}

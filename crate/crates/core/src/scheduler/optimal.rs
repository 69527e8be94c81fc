use super::{evaluate_assignment, BitTable, Demands, Schedule, SlotGrid};
use crate::{Error, Result};

/// Largest search space [`schedule_optimal`] accepts by default.
pub const DEFAULT_ASSIGNMENT_BUDGET: u64 = 100_000_000;

const REL_EPS: f64 = 1e-12;

/// Number of admissible assignments: the product of per-slot candidate counts.
pub fn assignment_count(grid: &SlotGrid) -> f64 {
    (0..grid.len()).map(|k| grid.candidates(k).len() as f64).product()
}

struct Search<'a> {
    table: &'a BitTable,
    /// Upper bound on the bits any assignment of slots `k..` can add.
    suffix: Vec<f64>,
    remaining: Vec<f64>,
    current: Vec<Option<usize>>,
    best: Vec<Option<usize>>,
    best_total: f64,
}

impl Search<'_> {
    fn run(&mut self, k: usize, prev: Option<usize>, total: f64) {
        if k == self.table.len() {
            if !self.best_total.is_finite() || total > self.best_total + REL_EPS * self.best_total.abs() {
                self.best_total = total;
                self.best.clone_from(&self.current);
            }
            return;
        }
        if self.best_total.is_finite() {
            let open: f64 = self.remaining.iter().sum();
            let ub = total + self.suffix[k].min(open);
            if ub <= self.best_total + 0.5 * REL_EPS * self.best_total.abs() {
                return;
            }
        }
        let mut any = false;
        for c in self.table.row(k) {
            let rem = self.remaining[c.vehicle];
            if rem <= 0.0 {
                continue;
            }
            any = true;
            let counted = c.bits(prev != Some(c.vehicle)).min(rem);
            self.remaining[c.vehicle] = rem - counted;
            self.current[k] = Some(c.vehicle);
            self.run(k + 1, Some(c.vehicle), total + counted);
            self.remaining[c.vehicle] = rem;
        }
        if !any {
            self.current[k] = None;
            self.run(k + 1, None, total);
        }
        self.current[k] = None;
    }
}

/// Exhaustive search for the assignment with the most counted bits.
///
/// Among optimal assignments the lexicographically smallest (by vehicle id,
/// slot by slot) is returned. Refuses grids with more than `budget`
/// admissible assignments.
pub fn schedule_optimal(grid: &SlotGrid, demands: &Demands, budget: u64) -> Result<Schedule> {
    let count = assignment_count(grid);
    if count > budget as f64 {
        return Err(Error::BudgetExceeded { assignments: count, budget });
    }
    let table = grid.bit_table(demands)?;
    let remaining = demands.remaining();
    let mut suffix = vec![0.0; table.len() + 1];
    for k in (0..table.len()).rev() {
        let m = table.row(k).iter().map(|c| c.full.min(remaining[c.vehicle])).fold(0.0, f64::max);
        suffix[k] = suffix[k + 1] + m;
    }
    let mut s = Search {
        table: &table,
        suffix,
        remaining,
        current: vec![None; table.len()],
        best: vec![None; table.len()],
        best_total: f64::NEG_INFINITY,
    };
    s.run(0, None, 0.0);
    let best = s.best;
    evaluate_assignment(&table, demands, &best)
}

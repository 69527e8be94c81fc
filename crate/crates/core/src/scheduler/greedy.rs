use rand::Rng;

use super::{evaluate_assignment, Demands, Schedule, SlotGrid};
use crate::Result;

/// Selection order and work done by one greedy run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GreedyTrace {
    /// `(slot, vehicle)` in the order slots were fixed.
    pub picks: Vec<(usize, usize)>,
    /// Candidate cells examined, the unit of the O(V·K²) bound.
    pub selections: u64,
}

struct State {
    live: Vec<Vec<(usize, f64)>>,
    alive: Vec<bool>,
    remaining: Vec<f64>,
    assignment: Vec<Option<usize>>,
    trace: GreedyTrace,
}

impl State {
    fn assign(&mut self, k: usize, v: usize, n: f64) {
        self.assignment[k] = Some(v);
        self.alive[k] = false;
        self.trace.picks.push((k, v));
        self.remaining[v] -= n;
        if self.remaining[v] <= 0.0 {
            self.evict(v);
        }
    }

    fn evict(&mut self, v: usize) {
        for (k, row) in self.live.iter_mut().enumerate() {
            if !self.alive[k] {
                continue;
            }
            self.trace.selections += row.len() as u64;
            row.retain(|c| c.0 != v);
        }
    }
}

/// Uniform choice among the indices of `items` whose key equals the extreme.
fn pick_extreme<R: Rng + ?Sized>(keys: &[f64], want_max: bool, rng: &mut R) -> usize {
    let best = if want_max {
        keys.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        keys.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let tied: Vec<usize> = (0..keys.len()).filter(|&i| keys[i] == best).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.random_range(0..tied.len())]
    }
}

/// Inner procedure: the slot/vehicle pair with the most overhead-free
/// bits. Among equally good slots, the one leaving the least to the other
/// candidates wins.
fn select<R: Rng + ?Sized>(st: &mut State, rng: &mut R) -> (usize, usize, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut tied: Vec<usize> = Vec::new();
    for (k, row) in st.live.iter().enumerate() {
        if !st.alive[k] {
            continue;
        }
        st.trace.selections += row.len() as u64;
        let m = row.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        if m > best {
            best = m;
            tied.clear();
        }
        if m == best {
            tied.push(k);
        }
    }
    let best_vehicle = |row: &[(usize, f64)], rng: &mut R| {
        let keys: Vec<f64> = row.iter().map(|c| c.1).collect();
        pick_extreme(&keys, true, rng)
    };
    if tied.len() == 1 {
        let k = tied[0];
        let i = best_vehicle(&st.live[k], rng);
        let (v, n) = st.live[k][i];
        return (k, v, n);
    }
    let choices: Vec<usize> = tied.iter().map(|&k| best_vehicle(&st.live[k], rng)).collect();
    let others: Vec<f64> = tied
        .iter()
        .zip(&choices)
        .map(|(&k, &i)| st.live[k].iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.1).sum())
        .collect();
    st.trace.selections += tied.iter().map(|&k| st.live[k].len() as u64).sum::<u64>();
    let it = pick_extreme(&others, false, rng);
    let k = tied[it];
    let (v, n) = st.live[k][choices[it]];
    (k, v, n)
}

/// Greedy assignment: fix single-candidate slots first, then repeatedly give
/// the slot with the largest overhead-free bits to its best vehicle, dropping
/// vehicles once their demand is met. Ties are broken with `rng`.
pub fn schedule_greedy<R: Rng + ?Sized>(grid: &SlotGrid, demands: &Demands, rng: &mut R) -> Result<Schedule> {
    schedule_greedy_traced(grid, demands, rng).map(|(s, _)| s)
}

pub fn schedule_greedy_traced<R: Rng + ?Sized>(
    grid: &SlotGrid,
    demands: &Demands,
    rng: &mut R,
) -> Result<(Schedule, GreedyTrace)> {
    let table = grid.bit_table(demands)?;
    let remaining = demands.remaining();
    let k_len = grid.len();
    let mut st = State {
        live: (0..k_len).map(|k| grid.row(k).filter(|c| remaining[c.0] > 0.0).collect()).collect(),
        alive: vec![true; k_len],
        remaining,
        assignment: vec![None; k_len],
        trace: GreedyTrace::default(),
    };

    for k in 0..k_len {
        st.trace.selections += 1;
        if st.alive[k] && st.live[k].len() == 1 {
            let (v, n) = st.live[k][0];
            st.assign(k, v, n);
        }
    }
    for k in 0..k_len {
        if st.live[k].is_empty() {
            st.alive[k] = false;
        }
    }
    while st.alive.iter().any(|&a| a) {
        let (k, v, n) = select(&mut st, rng);
        st.assign(k, v, n);
        for j in 0..k_len {
            if st.alive[j] && st.live[j].is_empty() {
                st.alive[j] = false;
            }
        }
    }
    let schedule = evaluate_assignment(&table, demands, &st.assignment)?;
    Ok((schedule, st.trace))
}

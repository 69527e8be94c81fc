//! Antenna separation as a function of time, and contact windows.

use std::io::Read;
use std::path::Path;

use crate::{Error, Result};

/// Bisection stops once the bracket is narrower than this, in seconds.
pub const CROSSING_TOLERANCE_S: f64 = 1e-9;

/// Constant-speed straight pass. The vehicle enters at separation
/// `d_entry` at time `t_enter`, closes to `d_min` and leaves symmetrically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraightLinePath {
    d_min: f64,
    speed: f64,
    d_entry: f64,
    t_enter: f64,
}

impl StraightLinePath {
    pub fn new(d_min: f64, speed: f64, d_entry: f64) -> Result<Self> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::param("speed", format!("must be positive, got {speed}")));
        }
        if !(d_min >= 0.0 && d_min <= d_entry && d_entry.is_finite()) {
            return Err(Error::param(
                "d_min",
                format!("need 0 <= d_min <= d_entry, got d_min={d_min}, d_entry={d_entry}"),
            ));
        }
        if d_entry <= 0.0 {
            return Err(Error::param("d_entry", "must be positive"));
        }
        Ok(Self { d_min, speed, d_entry, t_enter: 0.0 })
    }

    /// Path whose entry sight line makes angle `alpha` with the direction of motion.
    pub fn from_angle(alpha: f64, speed: f64, d_entry: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&alpha) {
            return Err(Error::param("alpha", format!("must lie in [0, pi/2), got {alpha}")));
        }
        Self::new(d_entry * alpha.sin(), speed, d_entry)
    }

    pub fn with_entry_time(mut self, t_enter: f64) -> Self {
        self.t_enter = t_enter;
        self
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn d_entry(&self) -> f64 {
        self.d_entry
    }

    pub fn t_enter(&self) -> f64 {
        self.t_enter
    }

    pub fn alpha(&self) -> f64 {
        (self.d_min / self.d_entry).asin()
    }

    /// Along-track distance from entry to the closest approach.
    pub fn half_length(&self) -> f64 {
        (self.d_entry * self.d_entry - self.d_min * self.d_min).max(0.0).sqrt()
    }

    pub fn closest_approach_time(&self) -> f64 {
        self.t_enter + self.half_length() / self.speed
    }

    fn distance(&self, t: f64) -> f64 {
        let along = self.half_length() - self.speed * (t - self.t_enter);
        self.d_min.hypot(along)
    }
}

/// Sampled `(t, d)` trace with linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTrajectory {
    samples: Vec<(f64, f64)>,
    path_length_m: Option<f64>,
}

impl TraceTrajectory {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::param("trace", "need at least 2 samples"));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::param("trace", format!("time not strictly increasing at sample {}", i + 1)));
            }
        }
        if let Some((i, _)) = samples.iter().enumerate().find(|(_, s)| !(s.1 > 0.0 && s.1.is_finite())) {
            return Err(Error::param("trace", format!("non-positive distance at sample {i}")));
        }
        Ok(Self { samples, path_length_m: None })
    }

    /// Converts `(t, x, y)` positions into separations from a tower at `tower`.
    pub fn from_positions(points: &[(f64, f64, f64)], tower: (f64, f64)) -> Result<Self> {
        let mut tr = Self::new(points.iter().map(|&(t, x, y)| (t, (x - tower.0).hypot(y - tower.1))).collect())?;
        tr.path_length_m = Some(points.windows(2).map(|w| (w[1].1 - w[0].1).hypot(w[1].2 - w[0].2)).sum());
        Ok(tr)
    }

    /// Reads `t_s,d_m` or `t_s,x_m,y_m` CSV. The positional form needs `tower`.
    ///
    /// Errors carry the 1-based line number of the offending row.
    pub fn from_csv<R: Read>(reader: R, tower: Option<(f64, f64)>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        let positional = match cols.as_slice() {
            ["t_s", "d_m"] => false,
            ["t_s", "x_m", "y_m"] => true,
            _ => {
                return Err(Error::Parse { line: 1, msg: "expected header `t_s,d_m` or `t_s,x_m,y_m`".into() });
            }
        };
        if positional && tower.is_none() {
            return Err(Error::Parse { line: 1, msg: "positional trace needs tower coordinates".into() });
        }
        let mut samples: Vec<(f64, f64)> = Vec::new();
        let mut points: Vec<(f64, f64, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let field = |i: usize| -> Result<f64> {
                let raw = rec.get(i).ok_or_else(|| Error::Parse { line, msg: format!("missing column {}", i + 1) })?;
                raw.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("`{raw}`: {e}") })
            };
            let t = field(0)?;
            let d = if positional {
                let (tx, ty) = tower.unwrap();
                let (x, y) = (field(1)?, field(2)?);
                points.push((t, x, y));
                (x - tx).hypot(y - ty)
            } else {
                field(1)?
            };
            if let Some(&(prev, _)) = samples.last() {
                if !(t > prev) {
                    return Err(Error::Parse { line, msg: format!("time {t} not after {prev}") });
                }
            }
            if !(d > 0.0) {
                return Err(Error::Parse { line, msg: format!("distance {d} must be positive") });
            }
            samples.push((t, d));
        }
        if positional {
            Self::from_positions(&points, tower.unwrap())
        } else {
            Self::new(samples)
        }
    }

    pub fn from_path(path: &Path, tower: Option<(f64, f64)>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?, tower)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Ground distance driven, known only for traces built from positions.
    pub fn path_length_m(&self) -> Option<f64> {
        self.path_length_m
    }

    pub fn average_speed(&self) -> Option<f64> {
        let (t0, t1) = (self.samples[0].0, self.samples.last().unwrap().0);
        self.path_length_m.map(|l| l / (t1 - t0))
    }

    /// The same route driven `factor` times faster.
    pub fn time_scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::param("factor", "must be positive"));
        }
        let t0 = self.samples[0].0;
        let mut tr = Self::new(self.samples.iter().map(|&(t, d)| (t0 + (t - t0) / factor, d)).collect())?;
        tr.path_length_m = self.path_length_m;
        Ok(tr)
    }

    /// Path length in the separation coordinate, summed over segments.
    pub fn separation_travel(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum()
    }

    fn segment_index(&self, t: f64) -> usize {
        let j = self.samples.partition_point(|s| s.0 <= t);
        j.clamp(1, self.samples.len() - 1) - 1
    }

    fn distance(&self, t: f64) -> f64 {
        let i = self.segment_index(t);
        let (t0, d0) = self.samples[i];
        let (t1, d1) = self.samples[i + 1];
        d0 + (d1 - d0) * (t - t0) / (t1 - t0)
    }

    /// Indices of segments overlapping `[t0, t1]`.
    fn segments_in(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        self.segment_index(t0)..self.segment_index(t1) + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Straight(StraightLinePath),
    Trace(TraceTrajectory),
}

impl From<StraightLinePath> for Trajectory {
    fn from(p: StraightLinePath) -> Self {
        Trajectory::Straight(p)
    }
}

impl From<TraceTrajectory> for Trajectory {
    fn from(t: TraceTrajectory) -> Self {
        Trajectory::Trace(t)
    }
}

/// Maximal interval with the separation at or below a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactWindow {
    pub t_in: f64,
    pub t_out: f64,
}

impl ContactWindow {
    pub fn duration(&self) -> f64 {
        self.t_out - self.t_in
    }
}

impl Trajectory {
    pub fn span(&self) -> (f64, f64) {
        match self {
            Trajectory::Straight(p) => (p.t_enter, p.t_enter + 2.0 * p.half_length() / p.speed),
            Trajectory::Trace(tr) => (tr.samples[0].0, tr.samples.last().unwrap().0),
        }
    }

    fn covers(&self, t: f64) -> bool {
        let (a, b) = self.span();
        t >= a && t <= b
    }

    pub fn distance_at(&self, t: f64) -> Result<f64> {
        if !self.covers(t) {
            return Err(Error::domain("time outside trajectory span", t));
        }
        Ok(self.distance_unchecked(t))
    }

    pub(crate) fn distance_unchecked(&self, t: f64) -> f64 {
        match self {
            Trajectory::Straight(p) => p.distance(t),
            Trajectory::Trace(tr) => tr.distance(t),
        }
    }

    /// Upper bound on |d'(t)| over `[t0, t1]`.
    pub fn speed_bound(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Trajectory::Straight(p) => p.speed,
            Trajectory::Trace(tr) => tr
                .segments_in(t0, t1)
                .map(|i| {
                    let (a, da) = tr.samples[i];
                    let (b, db) = tr.samples[i + 1];
                    ((db - da) / (b - a)).abs()
                })
                .fold(0.0, f64::max),
        }
    }

    /// Largest separation over `[t0, t1]`.
    pub fn max_distance_over(&self, t0: f64, t1: f64) -> f64 {
        let ends = self.distance_unchecked(t0).max(self.distance_unchecked(t1));
        match self {
            // convex in t
            Trajectory::Straight(_) => ends,
            Trajectory::Trace(tr) => tr
                .samples
                .iter()
                .filter(|s| s.0 > t0 && s.0 < t1)
                .fold(ends, |m, s| m.max(s.1)),
        }
    }

    /// Points in `(t0, t1)` where d(t) is not smooth.
    pub fn kinks(&self, t0: f64, t1: f64) -> Vec<f64> {
        match self {
            Trajectory::Straight(p) => {
                let tc = p.closest_approach_time();
                if tc > t0 && tc < t1 {
                    vec![tc]
                } else {
                    vec![]
                }
            }
            Trajectory::Trace(tr) => tr.samples.iter().map(|s| s.0).filter(|&t| t > t0 && t < t1).collect(),
        }
    }

    /// Times in `[t0, t1]` (clipped to the span) where `d(t) <= level`
    /// switches truth value, in increasing order.
    pub fn crossings(&self, level: f64, t0: f64, t1: f64) -> Vec<f64> {
        let (a, b) = self.span();
        let (t0, t1) = (t0.max(a), t1.min(b));
        if !(t1 > t0) {
            return vec![];
        }
        let inside = |t: f64| self.distance_unchecked(t) <= level;
        let mut out = Vec::new();
        match self {
            Trajectory::Straight(p) => {
                // two monotone branches around the closest approach
                let tc = p.closest_approach_time().clamp(t0, t1);
                for (lo, hi) in [(t0, tc), (tc, t1)] {
                    if hi > lo && inside(lo) != inside(hi) {
                        out.push(bisect(&inside, lo, hi));
                    }
                }
            }
            Trajectory::Trace(tr) => {
                for i in tr.segments_in(t0, t1) {
                    let lo = tr.samples[i].0.max(t0);
                    let hi = tr.samples[i + 1].0.min(t1);
                    if !(hi > lo) {
                        continue;
                    }
                    let (dl, dh) = (tr.distance(lo), tr.distance(hi));
                    if (dl <= level) != (dh <= level) {
                        let t = lo + (level - dl) / (dh - dl) * (hi - lo);
                        out.push(t.clamp(lo, hi));
                    }
                }
            }
        }
        out
    }
}

/// Bisection on a predicate that differs at the two ends.
fn bisect(inside: &impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    let lo_state = inside(lo);
    for _ in 0..200 {
        if hi - lo <= CROSSING_TOLERANCE_S {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inside(mid) == lo_state {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximal disjoint intervals with `d(t) <= d_max`, in time order.
pub fn contact_windows(trajectory: &Trajectory, d_max: f64) -> Vec<ContactWindow> {
    let (a, b) = trajectory.span();
    let mut inside = trajectory.distance_unchecked(a) <= d_max;
    let mut start = a;
    let mut windows = Vec::new();
    for t in trajectory.crossings(d_max, a, b) {
        if inside {
            windows.push(ContactWindow { t_in: start, t_out: t });
        } else {
            start = t;
        }
        inside = !inside;
    }
    if inside {
        windows.push(ContactWindow { t_in: start, t_out: b });
    }
    windows.retain(|w| w.t_out > w.t_in);
    windows
}

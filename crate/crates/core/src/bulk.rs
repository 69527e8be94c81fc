//! Data shower bulk: bits moved while a vehicle is within range.

use crate::channel::{CapacityProfile, Region};
use crate::quadrature::{panels_for, trapezoid, trapezoid_max_step};
use crate::trajectory::{contact_windows, ContactWindow, StraightLinePath, Trajectory};
use crate::{Error, Result};

/// Quadrature resolution. `distance_per_sample` bounds how far the
/// separation may move between two samples of a time integral;
/// `eta_step` is the panel width of distance integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSteps {
    pub distance_per_sample: f64,
    pub eta_step: f64,
}

impl Default for QuadratureSteps {
    fn default() -> Self {
        Self { distance_per_sample: 0.1, eta_step: 0.05 }
    }
}

impl QuadratureSteps {
    pub fn halved(self) -> Self {
        Self { distance_per_sample: self.distance_per_sample / 2.0, eta_step: self.eta_step / 2.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.distance_per_sample > 0.0) {
            return Err(Error::param("distance_per_sample", "must be positive"));
        }
        if !(self.eta_step > 0.0) {
            return Err(Error::param("eta_step", "must be positive"));
        }
        Ok(())
    }
}

/// Splits `[t0, t1]` at band switches and kinks so each piece is smooth and
/// lies in a single region.
fn smooth_pieces(traj: &Trajectory, model: &dyn CapacityProfile, t0: f64, t1: f64) -> Vec<(f64, f64, Region)> {
    let mut cuts = vec![t0, t1];
    cuts.extend(traj.crossings(model.thz_threshold(), t0, t1));
    cuts.extend(traj.crossings(model.mm_threshold(), t0, t1));
    cuts.extend(traj.kinks(t0, t1));
    cuts.retain(|t| *t >= t0 && *t <= t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = traj.distance_unchecked(0.5 * (w[0] + w[1]));
            (w[0], w[1], model.region(mid))
        })
        .collect()
}

/// ∫ C(d(t)) dt over `[t0, t1]`, clipped to the trajectory span.
pub fn integrate_capacity(
    traj: &Trajectory,
    model: &dyn CapacityProfile,
    t0: f64,
    t1: f64,
    steps: QuadratureSteps,
) -> Result<f64> {
    steps.validate()?;
    let (a, b) = traj.span();
    let (t0, t1) = (t0.max(a), t1.min(b));
    if !(t1 > t0) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (lo, hi, region) in smooth_pieces(traj, model, t0, t1) {
        if region == Region::OutOfRange {
            continue;
        }
        let travel = (hi - lo) * traj.speed_bound(lo, hi);
        let n = panels_for(travel, steps.distance_per_sample);
        total += trapezoid(|t| model.capacity_in(region, traj.distance_unchecked(t)), lo, hi, n);
    }
    Ok(total)
}

/// Bits per contact window, in time order.
pub fn bulk_by_window(
    traj: &Trajectory,
    model: &dyn CapacityProfile,
    steps: QuadratureSteps,
) -> Result<Vec<(ContactWindow, f64)>> {
    contact_windows(traj, model.mm_threshold())
        .into_iter()
        .map(|w| Ok((w, integrate_capacity(traj, model, w.t_in, w.t_out, steps)?)))
        .collect()
}

pub fn bulk_integral_with(traj: &Trajectory, model: &dyn CapacityProfile, steps: QuadratureSteps) -> Result<f64> {
    Ok(bulk_by_window(traj, model, steps)?.iter().map(|(_, bits)| bits).sum())
}

/// Total bits over every contact window of `traj`.
pub fn bulk_integral(traj: &Trajectory, model: &dyn CapacityProfile) -> Result<f64> {
    bulk_integral_with(traj, model, QuadratureSteps::default())
}

/// Mean of C over `[d_lo, d_hi]` with every distance weighted equally.
pub fn average_capacity(model: &dyn CapacityProfile, d_lo: f64, d_hi: f64) -> Result<f64> {
    average_capacity_with(model, d_lo, d_hi, QuadratureSteps::default().eta_step)
}

pub fn average_capacity_with(model: &dyn CapacityProfile, d_lo: f64, d_hi: f64, eta_step: f64) -> Result<f64> {
    if !(d_lo >= 0.0) {
        return Err(Error::domain("d_lo", d_lo));
    }
    if !(d_hi > d_lo) || !d_hi.is_finite() {
        return Err(Error::domain("d_hi (must exceed d_lo)", d_hi));
    }
    if !(eta_step > 0.0) {
        return Err(Error::param("eta_step", "must be positive"));
    }
    let mut cuts = vec![d_lo, d_hi];
    for th in [model.thz_threshold(), model.mm_threshold()] {
        if th > d_lo && th < d_hi {
            cuts.push(th);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        let region = model.region(0.5 * (w[0] + w[1]));
        if region == Region::OutOfRange {
            continue;
        }
        integral += trapezoid_max_step(|eta| model.capacity_in(region, eta), w[0], w[1], eta_step);
    }
    Ok(integral / (d_hi - d_lo))
}

/// Setup costs paid once per pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverheadTimes {
    pub eps_sync_mm: f64,
    pub eps_sync_thz: f64,
    pub eps_switch: f64,
}

impl OverheadTimes {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_sync_mm", self.eps_sync_mm),
            ("eps_sync_thz", self.eps_sync_thz),
            ("eps_switch", self.eps_switch),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.eps_sync_mm + self.eps_sync_thz + self.eps_switch
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormBulk {
    pub bits: f64,
    /// Contact time minus overheads, clamped at zero.
    pub usable_time: f64,
    pub average_capacity: f64,
    /// Overheads ate the whole contact.
    pub degenerate: bool,
}

/// Constant-speed estimate: usable contact time times the distance-averaged
/// capacity between closest approach and the mmWave threshold.
pub fn bulk_closed_form(
    path: &StraightLinePath,
    model: &dyn CapacityProfile,
    overheads: &OverheadTimes,
) -> Result<ClosedFormBulk> {
    overheads.validate()?;
    let d_th = model.mm_threshold();
    if path.d_min() >= d_th {
        return Ok(ClosedFormBulk { bits: 0.0, usable_time: 0.0, average_capacity: 0.0, degenerate: true });
    }
    let alpha = (path.d_min() / d_th).asin();
    let contact = 2.0 * d_th * alpha.cos() / path.speed();
    let average = average_capacity(model, path.d_min(), d_th)?;
    let usable = contact - overheads.total();
    if usable <= 0.0 {
        return Ok(ClosedFormBulk { bits: 0.0, usable_time: 0.0, average_capacity: average, degenerate: true });
    }
    Ok(ClosedFormBulk { bits: usable * average, usable_time: usable, average_capacity: average, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::CapacityModel;
    use crate::trajectory::TraceTrajectory;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    struct Constant(f64);

    impl CapacityProfile for Constant {
        fn thz_threshold(&self) -> f64 {
            10.0
        }
        fn mm_threshold(&self) -> f64 {
            200.0
        }
        fn capacity_in(&self, _: Region, _: f64) -> f64 {
            self.0
        }
    }

    /// C(η) = η inside 1 m.
    struct Linear;

    impl CapacityProfile for Linear {
        fn thz_threshold(&self) -> f64 {
            0.5
        }
        fn mm_threshold(&self) -> f64 {
            1.0
        }
        fn capacity_in(&self, _: Region, d: f64) -> f64 {
            d
        }
    }

    /// Different value per region, to catch a boundary evaluated with the wrong branch.
    struct Stepped;

    impl CapacityProfile for Stepped {
        fn thz_threshold(&self) -> f64 {
            10.0
        }
        fn mm_threshold(&self) -> f64 {
            200.0
        }
        fn capacity_in(&self, r: Region, _: f64) -> f64 {
            match r {
                Region::Thz => 100.0,
                Region::MmWave => 1.0,
                Region::OutOfRange => 0.0,
            }
        }
    }

    fn head_on(v: f64) -> Trajectory {
        StraightLinePath::new(0.0, v, 200.0).unwrap().into()
    }

    #[test]
    fn constant_over_window() {
        let tr: Trajectory = TraceTrajectory::new(vec![(0.0, 150.0), (30.0, 150.0)]).unwrap().into();
        assert_relative_eq!(bulk_integral(&tr, &Constant(7.0)).unwrap(), 7.0 * 30.0, max_relative = 1e-12);
    }

    #[test]
    fn never_in_range() {
        let tr: Trajectory = StraightLinePath::new(250.0, 1.0, 400.0).unwrap().into();
        assert_eq!(bulk_integral(&tr, &Constant(7.0)).unwrap(), 0.0);
    }

    #[test]
    fn head_on_constant_rate() {
        let bits = bulk_integral(&head_on(1.0), &Constant(1e9)).unwrap();
        assert_relative_eq!(bits, 4e11, max_relative = 1e-6);
    }

    #[test]
    fn regions_weighted_by_time() {
        // 20 s inside 10 m, 380 s between 10 and 200 m
        let bits = bulk_integral(&head_on(1.0), &Stepped).unwrap();
        assert_relative_eq!(bits, 20.0 * 100.0 + 380.0, max_relative = 1e-6);
    }

    #[test]
    fn outside_portions_contribute_nothing() {
        let tr: Trajectory = TraceTrajectory::new(vec![(0.0, 300.0), (10.0, 100.0), (20.0, 300.0)]).unwrap().into();
        // inside for 5 s on each side of the dip
        let bits = bulk_integral(&tr, &Constant(2.0)).unwrap();
        assert_relative_eq!(bits, 2.0 * 10.0, max_relative = 1e-9);
    }

    #[test]
    fn additive_over_windows() {
        let tr: Trajectory = TraceTrajectory::new(vec![
            (0.0, 300.0),
            (10.0, 5.0),
            (20.0, 300.0),
            (30.0, 300.0),
            (40.0, 50.0),
            (50.0, 250.0),
        ])
        .unwrap()
        .into();
        let model = CapacityModel::default();
        let per = bulk_by_window(&tr, &model, QuadratureSteps::default()).unwrap();
        assert_eq!(per.len(), 2);
        let sum: f64 = per.iter().map(|p| p.1).sum();
        let direct = integrate_capacity(&tr, &model, 0.0, 50.0, QuadratureSteps::default()).unwrap();
        assert_relative_eq!(sum, direct, max_relative = 1e-6);
    }

    #[test]
    fn average_of_stubs() {
        assert_relative_eq!(average_capacity(&Constant(3.0), 4.0, 200.0).unwrap(), 3.0, max_relative = 1e-12);
        assert_relative_eq!(average_capacity(&Linear, 0.0, 1.0).unwrap(), 0.5, max_relative = 1e-12);
        assert!(average_capacity(&Linear, 1.0, 1.0).is_err());
        assert!(average_capacity(&Linear, 2.0, 1.0).is_err());
    }

    #[test]
    fn average_defaults_matches_fine_grid() {
        let model = CapacityModel::default();
        let coarse = average_capacity(&model, 4.0, 200.0).unwrap();
        let fine = average_capacity_with(&model, 4.0, 200.0, 0.005).unwrap();
        assert!(coarse > 0.0 && coarse.is_finite());
        assert_relative_eq!(coarse, fine, max_relative = 1e-3);
        // THz part of the integral dominates
        let thz = average_capacity(&model, 4.0, 10.0).unwrap() * 6.0;
        let mm = average_capacity(&model, 10.0, 200.0).unwrap() * 190.0;
        assert!(thz > mm);
    }

    #[test]
    fn closed_form_stub() {
        let path = StraightLinePath::new(0.0, 2.0, 200.0).unwrap();
        let cf = bulk_closed_form(&path, &Constant(5.0), &OverheadTimes::default()).unwrap();
        assert_relative_eq!(cf.bits, 2.0 * 200.0 / 2.0 * 5.0, max_relative = 1e-12);
        assert!(!cf.degenerate);
    }

    #[test]
    fn closed_form_overheads_consume_contact() {
        let path = StraightLinePath::new(0.0, 2.0, 200.0).unwrap();
        let oh = OverheadTimes { eps_sync_mm: 100.0, eps_sync_thz: 50.0, eps_switch: 50.0 };
        let cf = bulk_closed_form(&path, &Constant(5.0), &oh).unwrap();
        assert_eq!(cf.bits, 0.0);
        assert!(cf.degenerate);
        let bad = OverheadTimes { eps_switch: -1.0, ..Default::default() };
        assert!(bulk_closed_form(&path, &Constant(5.0), &bad).is_err());
    }

    #[test]
    fn closed_form_defaults_exceed_terabit() {
        let v = 10.0 / 3.6;
        let path = StraightLinePath::new(4.0, v, 200.0).unwrap();
        let cf = bulk_closed_form(&path, &CapacityModel::default(), &OverheadTimes::default()).unwrap();
        assert!(cf.bits > 1e12, "{}", cf.bits);
    }

    #[test]
    fn closed_form_agrees_with_integral_head_on() {
        let model = CapacityModel::default();
        let path = StraightLinePath::new(0.0, 10.0 / 3.6, 200.0).unwrap();
        let cf = bulk_closed_form(&path, &model, &OverheadTimes::default()).unwrap();
        let integral = bulk_integral(&path.into(), &model).unwrap();
        assert_relative_eq!(cf.bits, integral, max_relative = 5e-3);
    }

    #[test]
    fn halving_steps_is_stable() {
        let model = CapacityModel::default();
        let tr: Trajectory = StraightLinePath::new(4.0, 10.0 / 3.6, 200.0).unwrap().into();
        let a = bulk_integral_with(&tr, &model, QuadratureSteps::default()).unwrap();
        let b = bulk_integral_with(&tr, &model, QuadratureSteps::default().halved()).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-3);
    }

    #[test]
    fn slower_means_more_bits() {
        let model = CapacityModel::default();
        let mut prev = f64::INFINITY;
        for kmh in 1..=10 {
            let tr: Trajectory = StraightLinePath::new(4.0, kmh as f64 / 3.6, 200.0).unwrap().into();
            let bits = bulk_integral(&tr, &model).unwrap();
            assert!(bits <= prev);
            prev = bits;
        }
    }

    #[test]
    fn window_length_independent_of_step() {
        let w = contact_windows(&head_on(1.0), 200.0);
        assert_abs_diff_eq!(w[0].duration(), 400.0, epsilon = 1e-6);
    }
}

use datashower_core::trajectory::StraightLinePath;
use rand::Rng;

use crate::error::Result;
use crate::scenario::FleetSpec;

/// Straight passes with speeds uniform in the spec's range, entry times
/// uniform in `[0, arrival_span_s]` and a shared closest approach. Each
/// vehicle enters at separation `d_entry`.
pub fn generate_fleet<R: Rng + ?Sized>(spec: &FleetSpec, d_entry: f64, rng: &mut R) -> Result<Vec<StraightLinePath>> {
    (0..spec.n_vehicles)
        .map(|_| {
            let speed = uniform(rng, spec.speed_min_mps, spec.speed_max_mps);
            let t_enter = uniform(rng, 0.0, spec.arrival_span_s);
            Ok(StraightLinePath::new(spec.d_min_m, speed, d_entry)?.with_entry_time(t_enter))
        })
        .collect()
}

pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

use datashower_core::bulk::{bulk_by_window, bulk_closed_form};
use datashower_core::trajectory::{StraightLinePath, Trajectory};
use rayon::prelude::*;

use super::{num, Context};
use crate::error::Result;
use crate::output::Output;

pub(super) fn bulk_vs_dmin_speed(ctx: &Context, out: &mut Output) -> Result<()> {
    let s = ctx.scenario();
    let d_th = ctx.model.mmwave().d_th_m;
    let cells: Vec<(f64, f64)> =
        s.grids.d_min_m.iter().flat_map(|&d| s.grids.speeds_kmh.iter().map(move |&v| (d, v))).collect();
    let rows = cells
        .par_iter()
        .map(|&(d_min, v_kmh)| -> Result<Vec<String>> {
            let path = StraightLinePath::new(d_min, v_kmh / 3.6, d_th)?;
            let cf = bulk_closed_form(&path, ctx.model.as_ref(), &s.overheads)?;
            let windows = bulk_by_window(&Trajectory::from(path), ctx.model.as_ref(), s.quadrature.steps())?;
            let integral: f64 = windows.iter().map(|w| w.1).sum();
            let contact: f64 = windows.iter().map(|w| w.0.duration()).sum();
            Ok(vec![
                num(d_min),
                num(v_kmh),
                num(cf.bits),
                num(integral),
                num(contact),
                num(cf.usable_time),
                u8::from(cf.degenerate).to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    out.write(
        "bulk_vs_dmin_speed.csv",
        &[
            "d_min_m",
            "speed_kmh",
            "closed_form_bits",
            "integral_bits",
            "contact_time_s",
            "usable_time_s",
            "degenerate",
        ],
        &rows,
    )?;
    Ok(())
}

/// The trace replayed at each configured average speed.
pub(super) fn bulk_trace(ctx: &Context, out: &mut Output) -> Result<()> {
    let s = ctx.scenario();
    let trace = ctx.loaded.trace()?;
    let (t0, t1) = (trace.samples()[0].0, trace.samples().last().unwrap().0);
    // traces without positions fall back to the separation they cover
    let length = trace.path_length_m().unwrap_or_else(|| trace.separation_travel());
    let native = length / (t1 - t0);
    let rows = s
        .trace
        .speeds_mps
        .par_iter()
        .map(|&v| -> Result<Vec<String>> {
            let tr = Trajectory::from(trace.time_scaled(v / native)?);
            let windows = bulk_by_window(&tr, ctx.model.as_ref(), s.quadrature.steps())?;
            let bits: f64 = windows.iter().map(|w| w.1).sum();
            let contact: f64 = windows.iter().map(|w| w.0.duration()).sum();
            Ok(vec![num(v), num(bits), num(contact), num(length / v), windows.len().to_string()])
        })
        .collect::<Result<Vec<_>>>()?;
    out.write(
        "bulk_trace.csv",
        &["speed_mps", "bulk_bits", "contact_time_s", "travel_time_s", "windows"],
        &rows,
    )?;
    Ok(())
}

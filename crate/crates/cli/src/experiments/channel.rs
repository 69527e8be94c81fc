use datashower_core::channel::{mmwave_state_probs, CapacityModel, CapacityProfile, Region, ThzBand};

use super::{axis, num, Context};
use crate::error::Result;
use crate::output::Output;

pub(super) fn state_probs_mm(ctx: &Context, out: &mut Output) -> Result<()> {
    let g = &ctx.scenario().grids;
    let rows: Vec<Vec<String>> = axis(g.mm_distance_step_m, g.mm_max_distance_m)
        .into_iter()
        .map(|d| {
            let p = mmwave_state_probs(d, ctx.model.mmwave());
            vec![num(d), num(p.los), num(p.nlos), num(p.outage)]
        })
        .collect();
    out.write("state_probs_mm.csv", &["d_m", "p_los", "p_nlos", "p_outage"], &rows)?;
    Ok(())
}

pub(super) fn state_probs_thz(ctx: &Context, out: &mut Output) -> Result<()> {
    let g = &ctx.scenario().grids;
    let mut rows = Vec::new();
    for &k in &g.thz_gamma_fractions {
        let mut thz = ctx.model.thz().clone();
        thz.tx_power_dbm = g.thz_probs_tx_power_dbm;
        thz.gamma_th_fraction = k;
        let band = ThzBand::new(&thz)?;
        for d in axis(g.thz_distance_step_m, g.thz_max_distance_m) {
            let p_out = band.outage_prob(d)?;
            rows.push(vec![num(k), num(d), num(1.0 - p_out), num(p_out)]);
        }
    }
    out.write("state_probs_thz.csv", &["gamma_th_fraction", "d_m", "p_los", "p_outage"], &rows)?;
    Ok(())
}

fn with_thz_power(ctx: &Context, p_dbm: f64) -> Result<CapacityModel> {
    let mut thz = ctx.model.thz().clone();
    thz.tx_power_dbm = p_dbm;
    Ok(CapacityModel::new(thz, ctx.model.mmwave().clone())?)
}

pub(super) fn thz_capacity_grid(ctx: &Context, out: &mut Output) -> Result<()> {
    let g = &ctx.scenario().grids;
    let mut rows = Vec::new();
    for &p in &g.thz_tx_powers_dbm {
        let m = with_thz_power(ctx, p)?;
        for d in axis(g.thz_distance_step_m, g.thz_max_distance_m) {
            rows.push(vec![num(p), num(d), num(m.thz_capacity_los(d)), num(m.capacity_in(Region::Thz, d))]);
        }
    }
    out.write(
        "thz_capacity_grid.csv",
        &["tx_power_dbm", "d_m", "capacity_los_bps", "capacity_expected_bps"],
        &rows,
    )?;
    Ok(())
}

pub(super) fn combined_capacity_grid(ctx: &Context, out: &mut Output) -> Result<()> {
    let g = &ctx.scenario().grids;
    let mut rows = Vec::new();
    for &p in &g.thz_tx_powers_dbm {
        let m = with_thz_power(ctx, p)?;
        for d in axis(g.combined_distance_step_m, g.combined_max_distance_m) {
            let region = match m.region(d) {
                Region::Thz => "thz",
                Region::MmWave => "mmwave",
                Region::OutOfRange => "out_of_range",
            };
            rows.push(vec![num(p), num(d), region.to_string(), num(m.capacity(d))]);
        }
    }
    out.write("combined_capacity_grid.csv", &["thz_tx_power_dbm", "d_m", "region", "capacity_bps"], &rows)?;
    Ok(())
}

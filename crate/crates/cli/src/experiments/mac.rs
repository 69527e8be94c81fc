use datashower_core::bulk::bulk_integral_with;
use datashower_core::macsim::{run_session, LossScript};
use datashower_core::trajectory::{StraightLinePath, Trajectory};
use rayon::prelude::*;

use super::{num, Context};
use crate::error::{CliError, Result};
use crate::output::Output;
use crate::seeds::substream;
use crate::stats::summarize;

/// Protocol sessions over one pass, one per run.
pub(super) fn mac_session(ctx: &Context, out: &mut Output) -> Result<()> {
    let s = ctx.scenario();
    let d_th = ctx.model.mmwave().d_th_m;
    let trajectory: Trajectory = match ctx.loaded.vehicle_trajectories(d_th)?.into_iter().next() {
        Some(t) => t,
        None => StraightLinePath::new(s.fleet.d_min_m, 0.5 * (s.fleet.speed_min_mps + s.fleet.speed_max_mps), d_th)?
            .into(),
    };
    let script = match &s.mac.loss_script {
        Some(p) => {
            let path = ctx.loaded.resolve(p);
            Some(LossScript::from_path(&path).map_err(|e| match e {
                datashower_core::Error::Io(source) => CliError::io(&path, source),
                other => other.into(),
            })?)
        }
        None => None,
    };
    let bulk = bulk_integral_with(&trajectory, ctx.model.as_ref(), s.quadrature.steps())?;

    let reports = (0..ctx.runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(ctx.seed, "mac-session", r);
            run_session(&trajectory, ctx.model.as_ref(), &s.protocol, script.as_ref(), &mut rng)
        })
        .collect::<datashower_core::Result<Vec<_>>>()?;

    let rows: Vec<Vec<String>> = reports
        .iter()
        .enumerate()
        .map(|(r, rep)| {
            vec![
                r.to_string(),
                num(rep.contact_time_s),
                num(rep.goodput_bps()),
                num(rep.delivered_bits),
                num(rep.available_bits),
                num(rep.guard_bits),
                num(bulk),
                num(rep.retransmitted_bits),
                rep.chunks_sent.to_string(),
                rep.acks_lost.to_string(),
                rep.mode_switches.to_string(),
            ]
        })
        .collect();
    out.write(
        "mac_session_runs.csv",
        &[
            "run",
            "contact_time_s",
            "goodput_bps",
            "delivered_bits",
            "available_bits",
            "guard_bits",
            "bulk_bits",
            "retransmitted_bits",
            "chunks_sent",
            "acks_lost",
            "mode_switches",
        ],
        &rows,
    )?;

    type Metric = fn(&datashower_core::macsim::SessionReport) -> f64;
    let metrics: [(&str, Metric); 3] = [
        ("goodput_bps", |r| r.goodput_bps()),
        ("delivered_bits", |r| r.delivered_bits),
        ("retransmitted_bits", |r| r.retransmitted_bits),
    ];
    let summary: Vec<Vec<String>> = metrics
        .iter()
        .map(|(name, f)| {
            let m = summarize(&reports.iter().map(f).collect::<Vec<_>>());
            vec![name.to_string(), num(m.mean), num(m.std), num(m.ci95_low), num(m.ci95_high)]
        })
        .collect();
    out.write("mac_session_summary.csv", &["metric", "mean", "std", "ci95_low", "ci95_high"], &summary)?;

    if let Some(first) = reports.first() {
        let mut buf = Vec::new();
        first.write_ticks_csv(&mut buf)?;
        out.write_raw("mac_session_ticks.csv", &buf)?;
        let hist: Vec<Vec<String>> = first
            .latency_histogram
            .iter()
            .map(|(bin, n)| vec![num(*bin as f64 * first.chunk_duration_s), n.to_string()])
            .collect();
        out.write("mac_latency.csv", &["latency_s", "packets"], &hist)?;
    }
    Ok(())
}

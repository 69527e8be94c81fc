//! Chunk/cumulative-ACK protocol stepped through a contact.
//!
//! Each tick of `chunk_duration_s` the sender fills one chunk with as many
//! packets as the current capacity allows: queued retransmissions first,
//! then fresh ids. The receiver answers with one cumulative ACK on the
//! slower reverse channel, which arrives `ack_delay_s` after the chunk ends.
//! Packets the ACK reports lost are queued for the next chunk; a lost ACK
//! queues the whole chunk again.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bulk::{integrate_capacity, QuadratureSteps};
use crate::channel::{CapacityProfile, Region};
use crate::trajectory::{contact_windows, Trajectory};
use crate::{Error, Result};

mod idset;

pub use idset::IdSet;

/// Which link carries data and which carries ACKs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelMode {
    ThzDataMmWaveAck,
    MmWaveDataLteAck,
    NoLink,
}

impl ChannelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelMode::ThzDataMmWaveAck => "thz_data_mmwave_ack",
            ChannelMode::MmWaveDataLteAck => "mmwave_data_lte_ack",
            ChannelMode::NoLink => "no_link",
        }
    }
}

impl std::fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn select_mode(d: f64, model: &dyn CapacityProfile) -> ChannelMode {
    match model.region(d) {
        Region::Thz => ChannelMode::ThzDataMmWaveAck,
        Region::MmWave => ChannelMode::MmWaveDataLteAck,
        Region::OutOfRange => ChannelMode::NoLink,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossModel {
    /// Independent per-packet loss while THz carries data.
    pub thz_packet_loss: f64,
    pub mmwave_packet_loss: f64,
    /// Enables a good/outage burst process. Each tick in the good state
    /// enters outage with the channel's outage probability at the current
    /// distance; each tick in outage leaves it with this probability. All
    /// packets of a chunk sent in outage are lost.
    pub burst_exit_prob: Option<f64>,
}

impl Default for LossModel {
    fn default() -> Self {
        Self { thz_packet_loss: 1e-3, mmwave_packet_loss: 1e-3, burst_exit_prob: None }
    }
}

impl LossModel {
    pub fn lossless() -> Self {
        Self { thz_packet_loss: 0.0, mmwave_packet_loss: 0.0, burst_exit_prob: None }
    }

    fn packet_loss(&self, mode: ChannelMode) -> f64 {
        match mode {
            ChannelMode::ThzDataMmWaveAck => self.thz_packet_loss,
            ChannelMode::MmWaveDataLteAck => self.mmwave_packet_loss,
            ChannelMode::NoLink => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub chunk_duration_s: f64,
    pub packet_size_bits: f64,
    pub loss: LossModel,
    pub ack_loss_prob: f64,
    /// Defaults to one chunk duration.
    pub ack_delay_s: Option<f64>,
    /// Fraction of each contact window given to the uplink phase.
    pub ul_dl_split: f64,
    pub phase_switch_guard_s: f64,
    /// Keep every chunk's packet list in the report.
    pub record_chunks: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            chunk_duration_s: 0.01,
            packet_size_bits: 1e6,
            loss: LossModel::default(),
            ack_loss_prob: 1e-3,
            ack_delay_s: None,
            ul_dl_split: 0.5,
            phase_switch_guard_s: 0.01,
            record_chunks: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("chunk_duration_s", self.chunk_duration_s), ("packet_size_bits", self.packet_size_bits)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        let probs = [
            ("loss.thz_packet_loss", self.loss.thz_packet_loss),
            ("loss.mmwave_packet_loss", self.loss.mmwave_packet_loss),
            ("loss.burst_exit_prob", self.loss.burst_exit_prob.unwrap_or(0.0)),
            ("ack_loss_prob", self.ack_loss_prob),
            ("ul_dl_split", self.ul_dl_split),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        if !(self.ack_delay() >= 0.0) {
            return Err(Error::param("ack_delay_s", "must be non-negative"));
        }
        if !(self.phase_switch_guard_s >= 0.0) {
            return Err(Error::param("phase_switch_guard_s", "must be non-negative"));
        }
        Ok(())
    }

    pub fn ack_delay(&self) -> f64 {
        self.ack_delay_s.unwrap_or(self.chunk_duration_s)
    }
}

/// Deterministic losses for regression runs. Lines are `chunk_id,packet_id`
/// for a lost data packet or `ack,chunk_id` for a lost ACK; `#` starts a
/// comment. When a script is supplied no random losses are drawn.
#[derive(Debug, Clone, Default)]
pub struct LossScript {
    data: HashMap<u64, IdSet>,
    acks: HashSet<u64>,
}

impl LossScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lose_packet(&mut self, chunk_id: u64, packet_id: u64) -> &mut Self {
        self.data.entry(chunk_id).or_default().insert(packet_id);
        self
    }

    pub fn lose_ack(&mut self, chunk_id: u64) -> &mut Self {
        self.acks.insert(chunk_id);
        self
    }

    pub fn parse<R: Read>(input: R) -> Result<Self> {
        let mut script = Self::new();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (a, b) = body
                .split_once(',')
                .ok_or(Error::Parse { line: line_no, msg: format!("expected two fields in `{body}`") })?;
            let num = |s: &str| {
                s.trim().parse::<u64>().map_err(|e| Error::Parse { line: line_no, msg: format!("`{}`: {e}", s.trim()) })
            };
            match a.trim() {
                "chunk_id" => {} // header
                "ack" => {
                    script.lose_ack(num(b)?);
                }
                _ => {
                    script.lose_packet(num(a)?, num(b)?);
                }
            }
        }
        Ok(script)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Uplink,
    Downlink,
}

/// Contiguous ids that were first sent at `t_first`.
#[derive(Debug, Clone, PartialEq)]
struct Span {
    ids: Range<u64>,
    t_first: f64,
}

impl Span {
    fn len(&self) -> u64 {
        self.ids.end - self.ids.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub chunk_id: u64,
    pub direction: Direction,
    pub mode: ChannelMode,
    pub t_sent: f64,
    /// Retransmitted ids, ascending, ahead of the fresh ones.
    pub retransmitted: Vec<Range<u64>>,
    pub fresh: Range<u64>,
    pub lost: IdSet,
    pub ack_lost: bool,
}

impl Chunk {
    pub fn packet_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.retransmitted.iter().cloned().flatten().chain(self.fresh.clone())
    }

    pub fn packet_count(&self) -> u64 {
        self.retransmitted.iter().map(|r| r.end - r.start).sum::<u64>() + (self.fresh.end - self.fresh.start)
    }
}

/// Receiver's answer for one chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeAck {
    pub chunk_id: u64,
    pub received_ok: Vec<bool>,
    pub t_sent: f64,
}

impl CumulativeAck {
    pub fn for_chunk(chunk: &Chunk, t_sent: f64) -> Self {
        Self { chunk_id: chunk.chunk_id, received_ok: chunk.packet_ids().map(|id| !chunk.lost.contains(id)).collect(), t_sent }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub t_s: f64,
    pub direction: Direction,
    pub mode: ChannelMode,
    pub offered_bits: f64,
    pub delivered_bits: f64,
    pub retx_bits: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionReport {
    pub ticks: Vec<TickRecord>,
    pub chunks: Vec<Chunk>,
    pub contact_time_s: f64,
    pub guard_time_s: f64,
    /// Capacity integral over the guard intervals.
    pub guard_bits: f64,
    /// Capacity integral over the ticks actually used for data.
    pub available_bits: f64,
    pub offered_bits: f64,
    /// Unique bits at the receiver.
    pub delivered_bits: f64,
    pub retransmitted_bits: f64,
    pub fresh_packets: u64,
    pub delivered_packets: u64,
    pub chunks_sent: u64,
    pub acks_lost: u64,
    pub mode_switches: u64,
    /// Packets by delivery latency, in whole chunk durations.
    pub latency_histogram: BTreeMap<u64, u64>,
    pub chunk_duration_s: f64,
}

impl SessionReport {
    pub fn goodput_bps(&self) -> f64 {
        if self.contact_time_s > 0.0 {
            self.delivered_bits / self.contact_time_s
        } else {
            0.0
        }
    }

    pub fn write_ticks_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::Parse { line: 0, msg: e.to_string() };
        w.write_record(["t_s", "mode", "offered_bits", "delivered_bits", "retx_bits"]).map_err(wrap)?;
        for t in &self.ticks {
            w.write_record([
                t.t_s.to_string(),
                t.mode.to_string(),
                t.offered_bits.to_string(),
                t.delivered_bits.to_string(),
                t.retx_bits.to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "goodput_bps = {}", self.goodput_bps())?;
        writeln!(out, "contact_time_s = {}", self.contact_time_s)?;
        writeln!(out, "guard_time_s = {}", self.guard_time_s)?;
        writeln!(out, "offered_bits = {}", self.offered_bits)?;
        writeln!(out, "delivered_bits = {}", self.delivered_bits)?;
        writeln!(out, "retransmitted_bits = {}", self.retransmitted_bits)?;
        writeln!(out, "chunks_sent = {}", self.chunks_sent)?;
        writeln!(out, "acks_lost = {}", self.acks_lost)?;
        writeln!(out, "mode_switches = {}", self.mode_switches)?;
        for (bin, n) in &self.latency_histogram {
            writeln!(out, "latency_{}s = {}", *bin as f64 * self.chunk_duration_s, n)?;
        }
        Ok(())
    }
}

struct InFlight {
    arrival: f64,
    spans: Vec<Span>,
    lost: IdSet,
    ack_lost: bool,
}

#[derive(Default)]
struct Endpoint {
    next_fresh: u64,
    retx: Vec<Span>,
    in_flight: VecDeque<InFlight>,
    delivered: IdSet,
}

impl Endpoint {
    fn new() -> Self {
        Self { next_fresh: 1, ..Default::default() }
    }

    fn process_acks(&mut self, now: f64, eps: f64) {
        while self.in_flight.front().is_some_and(|f| f.arrival <= now + eps) {
            let f = self.in_flight.pop_front().unwrap();
            for s in f.spans {
                if f.ack_lost {
                    self.retx.push(s);
                } else {
                    let lost_here = f.lost.runs_in(s.ids.clone());
                    self.retx.extend(lost_here.into_iter().map(|ids| Span { ids, t_first: s.t_first }));
                }
            }
            self.retx.sort_by_key(|s| s.ids.start);
        }
    }

    fn take_retx(&mut self, mut n: u64) -> Vec<Span> {
        let mut out = Vec::new();
        while n > 0 && !self.retx.is_empty() {
            let len = self.retx[0].len();
            if len <= n {
                n -= len;
                out.push(self.retx.remove(0));
            } else {
                let head = &mut self.retx[0];
                out.push(Span { ids: head.ids.start..head.ids.start + n, t_first: head.t_first });
                head.ids.start += n;
                n = 0;
            }
        }
        out
    }
}

/// Chooses lost ids among the `n` packets of `spans`.
fn draw_losses<R: Rng + ?Sized>(spans: &[Span], n: u64, p: f64, rng: &mut R) -> IdSet {
    let mut lost = IdSet::new();
    if p <= 0.0 || n == 0 {
        return lost;
    }
    if p >= 1.0 {
        for s in spans {
            lost.insert_range(s.ids.clone());
        }
        return lost;
    }
    let count = Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0);
    if count == 0 {
        return lost;
    }
    let mut positions = rand::seq::index::sample(rng, n as usize, count as usize).into_vec();
    positions.sort_unstable();
    let mut base = 0u64;
    let mut it = positions.into_iter().peekable();
    for s in spans {
        while let Some(&pos) = it.peek() {
            let pos = pos as u64;
            if pos >= base + s.len() {
                break;
            }
            lost.insert(s.ids.start + (pos - base));
            it.next();
        }
        base += s.len();
    }
    lost
}

struct Phase {
    direction: Direction,
    start: f64,
    end: f64,
}

fn phases(windows: &[(f64, f64)], cfg: &ProtocolConfig) -> (Vec<Phase>, Vec<(f64, f64)>) {
    let mut out = Vec::new();
    let mut guards = Vec::new();
    for &(a, b) in windows {
        let ul_end = a + cfg.ul_dl_split * (b - a);
        let mut dl_start = ul_end;
        if ul_end > a && ul_end < b {
            dl_start = (ul_end + cfg.phase_switch_guard_s).min(b);
            guards.push((ul_end, dl_start));
        }
        if ul_end > a {
            out.push(Phase { direction: Direction::Uplink, start: a, end: ul_end });
        }
        if b > dl_start {
            out.push(Phase { direction: Direction::Downlink, start: dl_start, end: b });
        }
    }
    (out, guards)
}

/// Steps the protocol through every contact window of `trajectory`.
pub fn run_session<R: Rng + ?Sized>(
    trajectory: &Trajectory,
    model: &dyn CapacityProfile,
    config: &ProtocolConfig,
    script: Option<&LossScript>,
    rng: &mut R,
) -> Result<SessionReport> {
    config.validate()?;
    let steps = QuadratureSteps::default();
    let windows: Vec<(f64, f64)> =
        contact_windows(trajectory, model.mm_threshold()).into_iter().map(|w| (w.t_in, w.t_out)).collect();
    let mut report = SessionReport { chunk_duration_s: config.chunk_duration_s, ..Default::default() };
    report.contact_time_s = windows.iter().map(|w| w.1 - w.0).sum();
    let (phases, guards) = phases(&windows, config);
    for &(a, b) in &guards {
        report.guard_time_s += b - a;
        report.guard_bits += integrate_capacity(trajectory, model, a, b, steps)?;
    }

    let dt = config.chunk_duration_s;
    let eps = 1e-9 * dt;
    let ps = config.packet_size_bits;
    let mut ul = Endpoint::new();
    let mut dl = Endpoint::new();
    let mut chunk_id = 0u64;
    let mut in_outage = false;
    let mut last_mode: Option<(ChannelMode, f64)> = None;

    for phase in &phases {
        let ep = match phase.direction {
            Direction::Uplink => &mut ul,
            Direction::Downlink => &mut dl,
        };
        let mut i = 0u64;
        loop {
            let t = phase.start + i as f64 * dt;
            let t_end = (t + dt).min(phase.end);
            if t_end - t <= eps {
                break;
            }
            i += 1;
            ep.process_acks(t, eps);
            let d = trajectory.distance_unchecked(t);
            let mode = select_mode(d, model);
            // consecutive ticks only; a gap between windows resets
            if let Some((m, t_prev_end)) = last_mode {
                if m != mode && (t - t_prev_end).abs() <= eps + config.phase_switch_guard_s {
                    report.mode_switches += 1;
                }
            }
            last_mode = Some((mode, t_end));
            if script.is_none() {
                if let Some(exit) = config.loss.burst_exit_prob {
                    in_outage = if in_outage {
                        rng.random::<f64>() >= exit
                    } else {
                        rng.random::<f64>() < model.outage_prob(d)
                    };
                }
            }

            let avail = integrate_capacity(trajectory, model, t, t_end, steps)?;
            // tolerate rounding in the tick width
            let n = (avail / ps + 1e-9).floor() as u64;
            let mut rec = TickRecord {
                t_s: t,
                direction: phase.direction,
                mode,
                offered_bits: 0.0,
                delivered_bits: 0.0,
                retx_bits: 0.0,
            };
            if n == 0 {
                report.ticks.push(rec);
                continue;
            }
            report.available_bits += avail;
            chunk_id += 1;
            let mut spans = ep.take_retx(n);
            let n_retx: u64 = spans.iter().map(Span::len).sum();
            let fresh = ep.next_fresh..ep.next_fresh + (n - n_retx);
            ep.next_fresh = fresh.end;
            report.fresh_packets += fresh.end - fresh.start;
            let retx_ranges: Vec<Range<u64>> = spans.iter().map(|s| s.ids.clone()).collect();
            spans.push(Span { ids: fresh.clone(), t_first: t });

            let (lost, ack_lost) = match script {
                Some(s) => {
                    let mut lost = IdSet::new();
                    if let Some(l) = s.data.get(&chunk_id) {
                        for sp in &spans {
                            for r in l.runs_in(sp.ids.clone()) {
                                lost.insert_range(r);
                            }
                        }
                    }
                    (lost, s.acks.contains(&chunk_id))
                }
                None => {
                    let p = if in_outage { 1.0 } else { config.loss.packet_loss(mode) };
                    let lost = draw_losses(&spans, n, p, rng);
                    (lost, config.ack_loss_prob > 0.0 && rng.random::<f64>() < config.ack_loss_prob)
                }
            };

            let mut newly = 0u64;
            for sp in &spans {
                for got in lost.gaps_in(sp.ids.clone()) {
                    for new in ep.delivered.gaps_in(got.clone()) {
                        let k = new.end - new.start;
                        newly += k;
                        let bin = ((t_end - sp.t_first) / dt).round() as u64;
                        *report.latency_histogram.entry(bin).or_default() += k;
                    }
                    ep.delivered.insert_range(got);
                }
            }
            rec.offered_bits = n as f64 * ps;
            rec.delivered_bits = newly as f64 * ps;
            rec.retx_bits = n_retx as f64 * ps;
            report.offered_bits += rec.offered_bits;
            report.delivered_bits += rec.delivered_bits;
            report.retransmitted_bits += rec.retx_bits;
            report.delivered_packets += newly;
            report.chunks_sent += 1;
            report.acks_lost += u64::from(ack_lost);
            report.ticks.push(rec);

            if config.record_chunks {
                report.chunks.push(Chunk {
                    chunk_id,
                    direction: phase.direction,
                    mode,
                    t_sent: t,
                    retransmitted: retx_ranges,
                    fresh,
                    lost: lost.clone(),
                    ack_lost,
                });
            }
            ep.in_flight.push_back(InFlight { arrival: t_end + config.ack_delay(), spans, lost, ack_lost });
        }
    }
    Ok(report)
}

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::Write;

use rand::Rng;

use super::{
    generate_traffic, step, FrameKind, MacAction, MacEvent, MacState, StateConfig, TrafficModel,
};
use crate::cancellation::CancellationConfig;
use crate::error::{ensure, Result};
use crate::ofdm::{CodingRate, Mcs, Modulation, PacketMeta, RadioConfig};
use crate::signal::{db_to_lin, derive_seed, lin_to_db, rng_from_seed, SimRng};

/// One station of the simulated network.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceConfig {
    /// Position in metres.
    pub position: [f64; 2],
    pub traffic: TrafficModel,
    /// Index of the device all DATA frames are sent to.
    pub peer: usize,
}

/// Scenario parameters of [`run_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct MacConfig {
    pub devices: Vec<DeviceConfig>,
    pub duration_s: f64,
    pub sensing_enabled: bool,
    /// Keep the separator running during receptions (the harmful configuration).
    pub force_separator: bool,
    pub m_timer_s: f64,
    pub radio: RadioConfig,
    pub mcs: Mcs,
    pub payload_bytes: usize,
    pub tx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    /// Log-distance exponent beyond the 1 m reference loss.
    pub path_loss_exponent: f64,
    pub shadowing_db: f64,
    pub cca_threshold_dbm: f64,
    pub slot_s: f64,
    pub sifs_s: f64,
    pub difs_s: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
    pub calibration_interval_s: f64,
    /// Power of the digital canceller's leakage model, which a forced separator subtracts from receptions, dBm.
    pub separator_model_dbm: f64,
    /// Stop after this many state-machine events.
    pub max_events: Option<usize>,
}

impl Default for MacConfig {
    fn default() -> Self {
        let tx_power_dbm = 20.0;
        let canc = CancellationConfig {
            tx_power_dbm,
            ..CancellationConfig::default()
        };
        Self {
            devices: vec![
                DeviceConfig {
                    position: [0.0, 0.0],
                    traffic: TrafficModel::streaming(),
                    peer: 1,
                },
                DeviceConfig {
                    position: [12.0, 0.0],
                    traffic: TrafficModel::streaming(),
                    peer: 0,
                },
            ],
            duration_s: 10.0,
            sensing_enabled: true,
            force_separator: false,
            m_timer_s: 1e-3,
            radio: RadioConfig::default(),
            mcs: Mcs::new(Modulation::Qam64, CodingRate::R2_3),
            payload_bytes: 1000,
            tx_power_dbm,
            noise_floor_dbm: -90.0,
            path_loss_exponent: 3.0,
            shadowing_db: 4.0,
            cca_threshold_dbm: -82.0,
            slot_s: 9e-6,
            sifs_s: 16e-6,
            difs_s: 34e-6,
            cw_min: 15,
            cw_max: 1023,
            retry_limit: 4,
            calibration_interval_s: canc.recalibration_interval_s,
            separator_model_dbm: canc.post_isolation_leakage_dbm() + canc.analog_mismatch_db,
            max_events: None,
        }
    }
}

impl MacConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(!self.devices.is_empty(), || "no devices".to_string())?;
        for (i, d) in self.devices.iter().enumerate() {
            ensure(d.peer < self.devices.len() && d.peer != i, || {
                format!("device {i} has invalid peer {}", d.peer)
            })?;
        }
        ensure(self.duration_s > 0.0, || {
            "duration must be positive".to_string()
        })?;
        ensure(self.m_timer_s > 0.0, || {
            "M-state timer must be positive".to_string()
        })?;
        ensure(self.cw_min >= 1 && self.cw_max >= self.cw_min, || {
            "invalid contention window".to_string()
        })?;
        ensure(self.sifs_s < self.difs_s, || {
            "SIFS must be shorter than DIFS".to_string()
        })?;
        ensure(self.calibration_interval_s > 0.0, || {
            "calibration interval must be positive".to_string()
        })
    }

    /// Received power between two devices, dBm (log-distance, 40 dB at 1 m).
    pub fn rx_power_dbm(&self, from: usize, to: usize) -> f64 {
        let a = self.devices[from].position;
        let b = self.devices[to].position;
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            .sqrt()
            .max(1.0);
        self.tx_power_dbm - 40.0 - 10.0 * self.path_loss_exponent * d.log10()
    }
}

/// SNR (dB) at which a frame of this MCS is received with probability 1/2.
pub fn mcs_midpoint_db(mcs: &Mcs) -> f64 {
    let base = match mcs.modulation {
        Modulation::Bpsk => 2.0,
        Modulation::Qpsk => 5.0,
        Modulation::Qam16 => 11.0,
        Modulation::Qam64 => 17.0,
    };
    let rate = match mcs.rate {
        CodingRate::R1_2 => 0.0,
        CodingRate::R2_3 => 2.0,
        CodingRate::R3_4 => 3.0,
        CodingRate::R5_6 => 5.0,
    };
    base + rate
}

/// Logistic frame success probability with a 1 dB slope.
pub fn success_probability(snr_db: f64, mcs: &Mcs) -> f64 {
    1.0 / (1.0 + (-(snr_db - mcs_midpoint_db(mcs))).exp())
}

/// One state-machine step of one device. `action` is `None` for a rejected (undefined) event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub time: f64,
    pub device: usize,
    pub event: MacEvent,
    pub before: MacState,
    pub after: MacState,
    pub action: Option<MacAction>,
    pub separator_active: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

impl EventLog {
    /// Writes `time_s device state_before event state_after action`, one line per entry.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            writeln!(
                w,
                "{:.9} {} {} {} {} {}",
                e.time,
                e.device,
                e.before.label(),
                e.event.label(),
                e.after.label(),
                e.action.map_or("protocol_violation", |a| a.label())
            )?;
        }
        Ok(())
    }

    /// Entries whose separator flag disagrees with being in M.
    pub fn separator_mismatches(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.separator_active != e.after.separator_active())
            .count()
    }

    pub fn violations(&self) -> usize {
        self.entries.iter().filter(|e| e.action.is_none()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureKind {
    Monostatic,
    Bistatic,
}

/// A sensing opportunity: CSI of one frame at one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureRecord {
    pub time: f64,
    pub device: usize,
    /// Transmitter of the captured frame (the device itself for monostatic captures).
    pub source: usize,
    pub kind: CaptureKind,
    pub frame: FrameKind,
}

/// Delivery statistics of the DATA traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct CommsStats {
    pub generated: usize,
    pub delivered: usize,
    pub lost: usize,
    pub delays_s: Vec<f64>,
    /// SNR of every DATA reception at its addressee, before any separator.
    pub snr_db: Vec<f64>,
    /// SNR after the separator when it is forced on during receptions (equal to `snr_db` otherwise).
    pub effective_snr_db: Vec<f64>,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl CommsStats {
    /// Delivery delay at quantile `q` in `[0, 1]`, ms.
    pub fn delay_ms_percentile(&self, q: f64) -> f64 {
        let mut d = self.delays_s.clone();
        d.sort_by(f64::total_cmp);
        percentile(&d, q) * 1e3
    }

    pub fn loss_rate(&self) -> f64 {
        let done = self.delivered + self.lost;
        if done == 0 {
            0.0
        } else {
            self.lost as f64 / done as f64
        }
    }

    pub fn mean_snr_db(&self) -> f64 {
        mean(&self.snr_db)
    }

    pub fn mean_effective_snr_db(&self) -> f64 {
        mean(&self.effective_snr_db)
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        f64::NAN
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Writes `scenario,delay_ms_p50,delay_ms_p95,loss_rate` rows with a header.
pub fn write_comms_csv<W: Write>(mut w: W, rows: &[(String, CommsStats)]) -> std::io::Result<()> {
    writeln!(w, "scenario,delay_ms_p50,delay_ms_p95,loss_rate")?;
    for (name, s) in rows {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6}",
            name,
            s.delay_ms_percentile(0.5),
            s.delay_ms_percentile(0.95),
            s.loss_rate()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub log: EventLog,
    pub captures: Vec<CaptureRecord>,
    pub stats: CommsStats,
    /// Number of times a transmission started while another was on the air.
    pub overlapping_transmissions: usize,
    pub calibrations: usize,
    /// Longest time spent in M in one episode, s.
    pub max_m_dwell_s: f64,
    pub end_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ev {
    Arrival { dev: usize, arrival: f64 },
    Attempt { dev: usize },
    TxEnd { dev: usize },
    AckStart { dev: usize, to: usize },
    AckTimeout { dev: usize, uid: u64, attempt: u32 },
    Timer { dev: usize, episode: u64 },
    Calibration { dev: usize },
}

struct Queued {
    time: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // Reversed so the max-heap pops the earliest event first, FIFO among equal times.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    uid: u64,
    arrival: f64,
    attempts: u32,
}

#[derive(Debug, Clone, Copy)]
struct OnAir {
    kind: FrameKind,
    to: usize,
    uid: u64,
}

struct Device {
    mac: MacState,
    separator: bool,
    timer_episode: u64,
    m_since: Option<f64>,
    queue: VecDeque<Pending>,
    on_air: Option<OnAir>,
    /// Transmitters currently heard, with their frame.
    hearing: Vec<(usize, FrameKind)>,
    attempt_pending: bool,
    deferred: bool,
    awaiting_ack: Option<(u64, u32)>,
    ack_due: bool,
    cw: u32,
    backoff: SimRng,
}

struct Sim<'a> {
    cfg: &'a MacConfig,
    seed: u64,
    state_cfg: StateConfig,
    heap: BinaryHeap<Queued>,
    seq: u64,
    devs: Vec<Device>,
    nav_until: f64,
    log: EventLog,
    captures: Vec<CaptureRecord>,
    stats: CommsStats,
    overlaps: usize,
    calibrations: usize,
    max_m_dwell: f64,
    data_duration: f64,
    ack_duration: f64,
    ack_mcs: Mcs,
}

impl<'a> Sim<'a> {
    fn push(&mut self, time: f64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Queued {
            time,
            seq: self.seq,
            ev,
        });
    }

    fn deliver(&mut self, now: f64, dev: usize, event: MacEvent) -> Option<MacAction> {
        let before = self.devs[dev].mac;
        let res = step(before, event, now, &self.state_cfg);
        let action = res.as_ref().ok().map(|r| r.1);
        if let Ok((after, a)) = res {
            let d = &mut self.devs[dev];
            match a {
                MacAction::EnableSeparator => {
                    d.separator = true;
                    d.m_since = Some(now);
                }
                MacAction::DisableSeparator => {
                    d.separator = false;
                    if let Some(t0) = d.m_since.take() {
                        self.max_m_dwell = self.max_m_dwell.max(now - t0);
                    }
                }
                _ => {}
            }
            d.mac = after;
            if let MacState::Monostatic { timer_deadline } = after {
                if !before.separator_active() {
                    d.timer_episode += 1;
                    let ep = d.timer_episode;
                    self.push(timer_deadline, Ev::Timer { dev, episode: ep });
                }
            }
        }
        let d = &self.devs[dev];
        self.log.entries.push(LogEntry {
            time: now,
            device: dev,
            event,
            before,
            after: d.mac,
            action,
            separator_active: d.separator,
        });
        action
    }

    fn channel_busy(&self, dev: usize, now: f64) -> bool {
        if now < self.nav_until {
            return true;
        }
        self.devs.iter().enumerate().any(|(e, d)| {
            e != dev
                && d.on_air.is_some()
                && self.cfg.rx_power_dbm(e, dev) >= self.cfg.cca_threshold_dbm
        })
    }

    fn device_idle(&self, dev: usize) -> bool {
        let d = &self.devs[dev];
        d.on_air.is_none() && d.awaiting_ack.is_none() && !d.ack_due && !d.attempt_pending
    }

    fn schedule_attempt(&mut self, dev: usize, now: f64) {
        let cfg = self.cfg;
        let d = &mut self.devs[dev];
        let slots = d.backoff.random_range(0..=d.cw);
        d.attempt_pending = true;
        d.deferred = false;
        self.push(
            now + cfg.difs_s + slots as f64 * cfg.slot_s,
            Ev::Attempt { dev },
        );
    }

    fn start_tx(&mut self, now: f64, dev: usize, kind: FrameKind, to: usize, uid: u64) {
        let dur = if kind == FrameKind::Ack {
            self.ack_duration
        } else {
            self.data_duration
        };
        if self.devs.iter().any(|d| d.on_air.is_some()) {
            self.overlaps += 1;
        }
        self.devs[dev].on_air = Some(OnAir { kind, to, uid });
        if self.deliver(now, dev, MacEvent::TxStart(kind)) == Some(MacAction::EnableSeparator) {
            self.captures.push(CaptureRecord {
                time: now,
                device: dev,
                source: dev,
                kind: CaptureKind::Monostatic,
                frame: kind,
            });
        }
        for e in 0..self.devs.len() {
            if e == dev || self.devs[e].on_air.is_some() {
                continue;
            }
            if self.cfg.rx_power_dbm(dev, e) < self.cfg.cca_threshold_dbm {
                continue;
            }
            self.devs[e].hearing.push((dev, kind));
            if self.deliver(now, e, MacEvent::RxStart(kind)) == Some(MacAction::BistaticCapture) {
                self.captures.push(CaptureRecord {
                    time: now,
                    device: e,
                    source: dev,
                    kind: CaptureKind::Bistatic,
                    frame: kind,
                });
            }
        }
        self.push(now + dur, Ev::TxEnd { dev });
    }

    /// Reception SNR with shadowing, and after a forced separator if configured.
    fn reception(&self, from: usize, to: usize, rng: &mut SimRng) -> (f64, f64) {
        let shadow: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
        let p = self.cfg.rx_power_dbm(from, to) + self.cfg.shadowing_db * shadow;
        let snr = p - self.cfg.noise_floor_dbm;
        let eff = if self.cfg.force_separator {
            p - lin_to_db(
                db_to_lin(self.cfg.noise_floor_dbm) + db_to_lin(self.cfg.separator_model_dbm),
            )
        } else {
            snr
        };
        (snr, eff)
    }

    fn frame_rng(&self, dev: usize, uid: u64, attempt: u32, ack: bool) -> SimRng {
        let s = derive_seed(
            derive_seed(self.seed, 2000 + dev as u64),
            uid * 64 + attempt as u64 * 2 + ack as u64,
        );
        rng_from_seed(s)
    }

    fn on_tx_end(&mut self, now: f64, dev: usize) {
        let air = self.devs[dev]
            .on_air
            .take()
            .expect("transmission in progress");
        self.deliver(now, dev, MacEvent::TxComplete);
        for e in 0..self.devs.len() {
            if let Some(pos) = self.devs[e].hearing.iter().position(|&(s, _)| s == dev) {
                self.devs[e].hearing.remove(pos);
                self.deliver(now, e, MacEvent::RxComplete);
            }
        }
        match air.kind {
            FrameKind::Data | FrameKind::Ndp => {
                let attempt = self.devs[dev].queue.front().map_or(0, |p| p.attempts);
                let mut rng = self.frame_rng(dev, air.uid, attempt, false);
                let (snr, eff) = self.reception(dev, air.to, &mut rng);
                self.stats.snr_db.push(snr);
                self.stats.effective_snr_db.push(eff);
                let ok = rng.random::<f64>() < success_probability(eff, &self.cfg.mcs);
                self.devs[dev].awaiting_ack = Some((air.uid, attempt));
                let ack_end = now + self.cfg.sifs_s + self.ack_duration;
                self.push(
                    ack_end + self.cfg.slot_s,
                    Ev::AckTimeout {
                        dev,
                        uid: air.uid,
                        attempt,
                    },
                );
                if ok {
                    self.devs[air.to].ack_due = true;
                    self.nav_until = self.nav_until.max(ack_end);
                    self.push(
                        now + self.cfg.sifs_s,
                        Ev::AckStart {
                            dev: air.to,
                            to: dev,
                        },
                    );
                }
            }
            FrameKind::Ack => {
                let sender = air.to;
                if let Some((uid, attempt)) = self.devs[sender].awaiting_ack {
                    let mut rng = self.frame_rng(sender, uid, attempt, true);
                    let (_, eff) = self.reception(dev, sender, &mut rng);
                    if rng.random::<f64>() < success_probability(eff, &self.ack_mcs) {
                        let s = &mut self.devs[sender];
                        let p = s.queue.pop_front().expect("acknowledged packet queued");
                        s.awaiting_ack = None;
                        s.cw = self.cfg.cw_min;
                        self.stats.delivered += 1;
                        self.stats.delays_s.push(now - p.arrival);
                        if !s.queue.is_empty() {
                            self.schedule_attempt(sender, now);
                        }
                    }
                }
            }
        }
        self.wake_deferred(now);
    }

    fn wake_deferred(&mut self, now: f64) {
        for e in 0..self.devs.len() {
            if self.devs[e].deferred && !self.channel_busy(e, now) && self.devs[e].on_air.is_none()
            {
                self.schedule_attempt(e, now.max(self.nav_until));
            }
        }
    }

    fn on_attempt(&mut self, now: f64, dev: usize) {
        self.devs[dev].attempt_pending = false;
        let d = &self.devs[dev];
        if d.on_air.is_some() || d.awaiting_ack.is_some() || d.queue.is_empty() {
            return;
        }
        if d.ack_due || !d.hearing.is_empty() || self.channel_busy(dev, now) {
            self.devs[dev].deferred = true;
            return;
        }
        let p = *d.queue.front().expect("non-empty queue");
        let to = self.cfg.devices[dev].peer;
        self.start_tx(now, dev, FrameKind::Data, to, p.uid);
    }

    fn on_ack_timeout(&mut self, now: f64, dev: usize, uid: u64, attempt: u32) {
        if self.devs[dev].awaiting_ack != Some((uid, attempt)) {
            return;
        }
        let cfg = self.cfg;
        let d = &mut self.devs[dev];
        d.awaiting_ack = None;
        let p = d.queue.front_mut().expect("packet awaiting ack");
        p.attempts += 1;
        if p.attempts > cfg.retry_limit {
            d.queue.pop_front();
            d.cw = cfg.cw_min;
            self.stats.lost += 1;
        } else {
            d.cw = (2 * d.cw + 1).min(cfg.cw_max);
        }
        if !self.devs[dev].queue.is_empty() {
            self.schedule_attempt(dev, now);
        }
    }
}

/// Runs the event-driven network simulation.
///
/// Channel access is a simplified CSMA/CA: a device waits DIFS plus a random backoff,
/// defers while any other transmission is heard above the CCA threshold (or an ACK is
/// reserved), and retries with a doubled window when the ACK does not come back. Sensing
/// only changes the state machine, never timing or random draws, so runs with sensing on
/// and off see the same traffic outcome. Dummy-load calibration is internal to a device
/// and takes no air time.
pub fn run_scenario(cfg: &MacConfig, seed: u64) -> Result<ScenarioResult> {
    cfg.validate()?;
    let data_duration =
        PacketMeta::for_payload(0.0, cfg.mcs, cfg.payload_bytes, &cfg.radio)?.duration;
    let ack_mcs = Mcs::new(Modulation::Bpsk, CodingRate::R1_2);
    let ack_duration = PacketMeta::for_payload(0.0, ack_mcs, 14, &cfg.radio)?.duration;
    let devs = (0..cfg.devices.len())
        .map(|i| Device {
            mac: MacState::Communication,
            separator: false,
            timer_episode: 0,
            m_since: None,
            queue: VecDeque::new(),
            on_air: None,
            hearing: Vec::new(),
            attempt_pending: false,
            deferred: false,
            awaiting_ack: None,
            ack_due: false,
            cw: cfg.cw_min,
            backoff: rng_from_seed(derive_seed(seed, 1000 + i as u64)),
        })
        .collect();
    let mut sim = Sim {
        cfg,
        seed,
        state_cfg: StateConfig {
            sensing_enabled: cfg.sensing_enabled,
            m_timer_s: cfg.m_timer_s,
        },
        heap: BinaryHeap::new(),
        seq: 0,
        devs,
        nav_until: 0.0,
        log: EventLog::default(),
        captures: Vec::new(),
        stats: CommsStats {
            generated: 0,
            delivered: 0,
            lost: 0,
            delays_s: Vec::new(),
            snr_db: Vec::new(),
            effective_snr_db: Vec::new(),
        },
        overlaps: 0,
        calibrations: 0,
        max_m_dwell: 0.0,
        data_duration,
        ack_duration,
        ack_mcs,
    };
    for (i, d) in cfg.devices.iter().enumerate() {
        let sched = generate_traffic(
            &d.traffic,
            cfg.duration_s,
            derive_seed(seed, 3000 + i as u64),
        )?;
        sim.stats.generated += sched.len();
        for &t in sched.times() {
            sim.push(t, Ev::Arrival { dev: i, arrival: t });
        }
        if cfg.sensing_enabled {
            // Stagger first calibrations so devices do not all calibrate at once.
            let first =
                cfg.calibration_interval_s * (i as f64 + 1.0) / (cfg.devices.len() as f64 + 1.0);
            sim.push(first, Ev::Calibration { dev: i });
        }
    }
    let mut uid_next = vec![0u64; cfg.devices.len()];
    let mut now = 0.0;
    while let Some(q) = sim.heap.pop() {
        if q.time > cfg.duration_s {
            break;
        }
        if cfg.max_events.is_some_and(|m| sim.log.entries.len() >= m) {
            break;
        }
        now = q.time;
        match q.ev {
            Ev::Arrival { dev, arrival } => {
                let uid = uid_next[dev];
                uid_next[dev] += 1;
                sim.devs[dev].queue.push_back(Pending {
                    uid,
                    arrival,
                    attempts: 0,
                });
                if sim.device_idle(dev) && !sim.devs[dev].deferred {
                    sim.schedule_attempt(dev, now);
                }
            }
            Ev::Attempt { dev } => sim.on_attempt(now, dev),
            Ev::TxEnd { dev } => sim.on_tx_end(now, dev),
            Ev::AckStart { dev, to } => {
                sim.devs[dev].ack_due = false;
                sim.start_tx(now, dev, FrameKind::Ack, to, 0);
            }
            Ev::AckTimeout { dev, uid, attempt } => {
                sim.on_ack_timeout(now, dev, uid, attempt);
                sim.wake_deferred(now);
            }
            Ev::Timer { dev, episode } => {
                let d = &sim.devs[dev];
                if d.timer_episode == episode && d.mac.separator_active() {
                    sim.deliver(now, dev, MacEvent::TimerExpiry);
                }
            }
            Ev::Calibration { dev } => match sim.deliver(now, dev, MacEvent::CalibrationDue) {
                Some(MacAction::Calibrate) => {
                    sim.calibrations += 1;
                    sim.push(now + cfg.calibration_interval_s, Ev::Calibration { dev });
                }
                _ => sim.push(now + 1e-3, Ev::Calibration { dev }),
            },
        }
    }
    Ok(ScenarioResult {
        log: sim.log,
        captures: sim.captures,
        stats: sim.stats,
        overlapping_transmissions: sim.overlaps,
        calibrations: sim.calibrations,
        max_m_dwell_s: sim.max_m_dwell,
        end_time: now,
    })
}

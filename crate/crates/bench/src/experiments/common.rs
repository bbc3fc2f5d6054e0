//! Scene synthesis and trial plumbing shared by the experiments.

use std::f64::consts::PI;

use isac_core::channel::{
    propagate, AntennaArray, AntennaGains, ImpairmentProfile, Point3, PropagationPath,
    ScenarioGeometry, Trajectory,
};
use isac_core::estimation::TxSchedule;
use isac_core::mac::{generate_traffic, TrafficModel};
use isac_core::ofdm::{
    build_packet, extract_csi, CodingRate, CsiMatrix, Mcs, Modulation, PacketMeta, RadioConfig,
};
use isac_core::signal::{derive_seed, mean_power, watts_to_dbm, SampleBuffer};
use isac_core::Complex64;
use rand::Rng;
use rayon::prelude::*;

/// A point reflector with a directly specified amplitude (relative to the transmit signal).
#[derive(Debug, Clone, PartialEq)]
pub struct Reflector {
    pub trajectory: Trajectory,
    pub amplitude: Complex64,
}

impl Reflector {
    pub fn fixed(position: Point3, amplitude: Complex64) -> Self {
        Self {
            trajectory: Trajectory::Static(position),
            amplitude,
        }
    }

    pub fn moving(start: Point3, velocity: Point3, amplitude: Complex64) -> Self {
        Self {
            trajectory: Trajectory::Linear { start, velocity },
            amplitude,
        }
    }
}

/// Monostatic CSI after the separator: the device's own packets reflected back, with
/// leakage removed and receiver noise `snr_db` below the power of the first reflector.
///
/// Each packet is a preamble-only frame sent at the given time, propagated through the
/// reflectors onto every element of `array`, and measured from its long training symbols.
pub fn monostatic_csi(
    array: &AntennaArray,
    reflectors: &[Reflector],
    radio: &RadioConfig,
    times: &[f64],
    snr_db: f64,
    seed: u64,
) -> anyhow::Result<Vec<CsiMatrix>> {
    let meta = PacketMeta::new(0.0, Mcs::new(Modulation::Bpsk, CodingRate::R1_2), 1, radio)?;
    let packet = build_packet(&[], &meta, radio)?;
    let samples = packet.buffer.padded(32).into_samples();
    let tx_power = mean_power(packet.buffer.samples());
    let signal_dbm =
        watts_to_dbm(tx_power * reflectors.first().map_or(1.0, |r| r.amplitude.norm_sqr()));
    let geom = ScenarioGeometry {
        tx_pos: array.position,
        array: array.clone(),
        tx_power_w: 1.0,
        gains: AntennaGains::default(),
        paths: reflectors
            .iter()
            .map(|r| PropagationPath::reflector_with_amplitude(r.trajectory.clone(), r.amplitude))
            .collect(),
    };
    times
        .iter()
        .enumerate()
        .map(|(l, &t)| {
            let tx = SampleBuffer::new(samples.clone(), radio.sample_rate(), t)?;
            let rx = propagate(
                &tx,
                &geom,
                &ImpairmentProfile::none(),
                signal_dbm - snr_db,
                radio,
                t,
                derive_seed(seed, l as u64),
            )?;
            Ok(extract_csi(&rx, 0, radio, l as u64)?)
        })
        .collect()
}

pub fn traffic_model(kind: &str) -> TrafficModel {
    match kind {
        "gaming" => TrafficModel::gaming(),
        "regular" => TrafficModel::Regular { rate_hz: 100.0 },
        _ => TrafficModel::streaming(),
    }
}

/// The first `packets` transmit times of a traffic trace, shifted to start at zero.
pub fn schedule(kind: &str, packets: usize, seed: u64) -> anyhow::Result<TxSchedule> {
    let model = traffic_model(kind);
    let mut duration = 1.0;
    loop {
        let s = generate_traffic(&model, duration, seed)?;
        if s.len() >= packets {
            let t0 = s.times()[0];
            return Ok(TxSchedule::new(
                s.times()[..packets].iter().map(|t| t - t0).collect(),
            )?);
        }
        duration *= 2.0;
        anyhow::ensure!(
            duration < 1e5,
            "traffic model {kind} produced too few packets"
        );
    }
}

/// Runs `f` over trial indices on the worker pool; output order follows the index.
pub fn run_trials<T: Send>(
    trials: usize,
    workers: usize,
    f: impl Fn(usize) -> anyhow::Result<T> + Sync + Send,
) -> anyhow::Result<Vec<T>> {
    if workers == 1 {
        return (0..trials).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?;
    pool.install(|| (0..trials).into_par_iter().map(f).collect())
}

pub fn polar(range: f64, azimuth_deg: f64) -> Point3 {
    let a = azimuth_deg.to_radians();
    Point3::new(range * a.cos(), range * a.sin(), 0.0)
}

pub fn db_amplitude(db: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(10f64.powf(db / 20.0), phase)
}

/// Secondary moving scatterers on a walking person.
pub const LIMBS: usize = 2;

/// A person at `position` at time `mid`, walking with `velocity`: the torso at 0 dB and
/// [`LIMBS`] weaker limbs offset by up to 0.3 m that swing faster along the heading.
pub fn walking_person(
    rng: &mut impl Rng,
    position: Point3,
    velocity: Point3,
    mid: f64,
) -> Vec<Reflector> {
    let start = position - velocity * mid;
    let heading = velocity.y.atan2(velocity.x).to_degrees();
    let mut out = vec![Reflector::moving(
        start,
        velocity,
        db_amplitude(0.0, rng.random_range(0.0..2.0 * PI)),
    )];
    for _ in 0..LIMBS {
        let offset = polar(rng.random_range(0.1..0.3), rng.random_range(0.0..360.0));
        let swing = polar(
            rng.random_range(0.2..0.6),
            heading + rng.random_range(-20.0..20.0),
        );
        let amp = db_amplitude(
            rng.random_range(-8.0..-4.0),
            rng.random_range(0.0..2.0 * PI),
        );
        out.push(Reflector::moving(start + offset, velocity + swing, amp));
    }
    out
}

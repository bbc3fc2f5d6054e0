use num_complex::Complex64;
use rand::Rng;

use super::{
    calibration_protocol, fit_cancellers, separator_pipeline, CalibrationEntry, CancellationConfig,
    CancellatorState, LeakageChannel, Port, Transmitter, TxReference,
};
use crate::channel::RxComponents;
use crate::error::Result;
use crate::mac::MacState;
use crate::ofdm::{build_packet, CodingRate, Mcs, Modulation, PacketMeta, RadioConfig};
use crate::signal::{
    db_to_lin, derive_seed, generate_noise, lin_to_db, mean_power, rng_from_seed, watts_to_dbm,
};

/// Per-stage leakage suppression of one measured packet.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub first_stage_db: f64,
    pub analog_db: f64,
    pub digital_db: f64,
    pub total_db: f64,
    /// Leakage power left after the full chain, dBm.
    pub residual_dbm: f64,
    pub noise_dbm: f64,
    /// Change of the reflection power through the chain, dB.
    pub reflection_change_db: f64,
    pub calibration_log: Vec<CalibrationEntry>,
}

/// Reflection preservation through the separator for one random scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PreservationReport {
    pub reflection_dbm: f64,
    /// Power change of the reflections through the separator, dB (0 means untouched).
    pub reflection_change_db: f64,
    pub leakage_suppression_db: f64,
}

/// A leakage channel plus integer-delay reflections `(delay_samples, gain)`.
struct Scene {
    leak: LeakageChannel,
    reflections: Vec<(usize, Complex64)>,
}

impl Scene {
    /// Reflections sit between two samples past the leakage span and the end of the digital filter.
    fn draw(cfg: &CancellationConfig, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let leak = LeakageChannel::generate(cfg, &mut rng);
        let lo = cfg.leakage_taps + 1;
        let hi = cfg.digital_taps.saturating_sub(4).max(lo);
        let n = rng.random_range(1..=3);
        let reflections = (0..n)
            .map(|_| {
                let d = rng.random_range(lo..=hi);
                let p = db_to_lin(rng.random_range(-85.0..-70.0));
                (
                    d,
                    Complex64::from_polar(p.sqrt(), rng.random_range(0.0..std::f64::consts::TAU)),
                )
            })
            .collect();
        Self { leak, reflections }
    }

    fn reflect(&self, rf: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); rf.len()];
        for &(d, g) in &self.reflections {
            for n in d..rf.len() {
                out[n] += g * rf[n - d];
            }
        }
        out
    }

    /// Antenna-side reception before the first stage.
    fn receive(
        &self,
        cfg: &CancellationConfig,
        tx: &TxReference,
        t: f64,
        with_reflections: bool,
        noise_seed: u64,
    ) -> Result<RxComponents> {
        let raw = db_to_lin(cfg.isolation_db).sqrt();
        let mut rx = RxComponents::zeros(tx.rf.len(), 20e6, t);
        rx.leakage = self
            .leak
            .leak(&tx.rf, t, Port::Antenna)
            .iter()
            .map(|v| v * raw)
            .collect();
        if with_reflections {
            rx.reflection = self.reflect(&tx.rf);
        }
        rx.noise = generate_noise(
            &mut rng_from_seed(noise_seed),
            tx.rf.len(),
            db_to_lin(cfg.noise_floor_dbm - 30.0),
        )?;
        Ok(rx)
    }
}

fn measurement_packet(seed: u64) -> Result<(Vec<Complex64>, usize)> {
    let radio = RadioConfig::default();
    let meta = PacketMeta::new(
        0.0,
        Mcs::new(Modulation::Qam16, CodingRate::R1_2),
        20,
        &radio,
    )?;
    let mut rng = rng_from_seed(seed);
    let bits: Vec<bool> = (0..meta.capacity_bits(&radio))
        .map(|_| rng.random())
        .collect();
    let p = build_packet(&bits, &meta, &radio)?;
    Ok((p.buffer.samples().to_vec(), p.preamble_len))
}

fn monostatic() -> MacState {
    MacState::Monostatic {
        timer_deadline: f64::INFINITY,
    }
}

/// Calibrates on the dummy load at time 0 and measures the chain on one packet sent
/// `elapsed_s` seconds later with the antenna connected.
pub fn measure_budget(cfg: &CancellationConfig, seed: u64, elapsed_s: f64) -> Result<BudgetReport> {
    cfg.validate()?;
    let scene = Scene::draw(cfg, derive_seed(seed, 1));
    let (baseband, pre_len) = measurement_packet(derive_seed(seed, 2))?;
    let (state, log) = calibration_protocol(
        &CancellatorState::new(cfg.digital_taps),
        &baseband[..pre_len],
        &scene.leak,
        cfg,
        0.0,
        derive_seed(seed, 3),
    )?;
    let tx = Transmitter::from_config(cfg).emit(
        &baseband,
        pre_len,
        &mut rng_from_seed(derive_seed(seed, 4)),
    )?;
    let rx = scene.receive(cfg, &tx, elapsed_s, true, derive_seed(seed, 5))?;

    let s1 = super::first_stage(&rx, cfg.separator, cfg.isolation_db);
    let s2 = super::analog_cancel(&s1, &tx, &state);
    let s3 = separator_pipeline(
        std::slice::from_ref(&rx),
        &tx,
        std::slice::from_ref(&state),
        &monostatic(),
        false,
        cfg,
    )?
    .components
    .remove(0);

    let p0 = mean_power(&rx.leakage);
    let p1 = mean_power(&s1.leakage);
    let p2 = mean_power(&s2.leakage);
    let p3 = mean_power(&s3.leakage);
    Ok(BudgetReport {
        first_stage_db: lin_to_db(p0 / p1),
        analog_db: lin_to_db(p1 / p2),
        digital_db: lin_to_db(p2 / p3),
        total_db: lin_to_db(p0 / p3),
        residual_dbm: watts_to_dbm(p3),
        noise_dbm: cfg.noise_floor_dbm,
        reflection_change_db: lin_to_db(mean_power(&s3.reflection) / mean_power(&rx.reflection)),
        calibration_log: log,
    })
}

/// Runs one random scene through the separator twice, with and without its reflections,
/// using identical noise and transmitter draws. The difference of the two outputs is the
/// reflection content that survived, compared against the reflections at the input.
///
/// `self_adapted` calibrates on the dummy load. Otherwise the cancellers are adapted with
/// the antenna connected, so reflections inside the digital filter span are learned too.
pub fn preservation_trial(
    cfg: &CancellationConfig,
    seed: u64,
    self_adapted: bool,
) -> Result<PreservationReport> {
    cfg.validate()?;
    let scene = Scene::draw(cfg, derive_seed(seed, 1));
    let (baseband, pre_len) = measurement_packet(derive_seed(seed, 2))?;
    let preamble = &baseband[..pre_len];
    let transmitter = Transmitter::from_config(cfg);

    let calibrate_for = |with_reflections: bool| -> Result<CancellatorState> {
        if self_adapted {
            let (s, _) = calibration_protocol(
                &CancellatorState::new(cfg.digital_taps),
                preamble,
                &scene.leak,
                cfg,
                0.0,
                derive_seed(seed, 3),
            )?;
            return Ok(s);
        }
        let mut obs = Vec::with_capacity(cfg.calibration_passes);
        for pass in 0..cfg.calibration_passes {
            let pass_seed = derive_seed(derive_seed(seed, 3), pass as u64);
            let tx = transmitter.emit(preamble, pre_len, &mut rng_from_seed(pass_seed))?;
            let rx = scene.receive(cfg, &tx, 0.0, with_reflections, derive_seed(pass_seed, 1))?;
            let rx = super::first_stage(&rx, cfg.separator, cfg.isolation_db);
            obs.push((tx, rx.total()));
        }
        let (analog_tap, digital_taps) = fit_cancellers(&obs, cfg.digital_taps, cfg.lms_mu)?;
        let mut s = CancellatorState::new(cfg.digital_taps);
        s.analog_tap = analog_tap;
        s.digital_taps = digital_taps;
        s.calibrated_at = Some(0.0);
        Ok(s)
    };

    let tx = transmitter.emit(&baseband, pre_len, &mut rng_from_seed(derive_seed(seed, 4)))?;
    let run = |with_reflections: bool| -> Result<(RxComponents, RxComponents)> {
        let state = calibrate_for(with_reflections)?;
        let rx = scene.receive(cfg, &tx, 0.0, with_reflections, derive_seed(seed, 5))?;
        let out = separator_pipeline(
            std::slice::from_ref(&rx),
            &tx,
            &[state],
            &monostatic(),
            false,
            cfg,
        )?
        .components
        .remove(0);
        Ok((rx, out))
    };
    let (rx_with, out_with) = run(true)?;
    let (_, out_without) = run(false)?;

    let survived: Vec<Complex64> = out_with
        .total()
        .iter()
        .zip(out_without.total())
        .map(|(a, b)| a - b)
        .collect();
    let p_in = mean_power(&rx_with.reflection);
    Ok(PreservationReport {
        reflection_dbm: watts_to_dbm(p_in),
        reflection_change_db: lin_to_db(mean_power(&survived) / p_in),
        leakage_suppression_db: lin_to_db(
            mean_power(&rx_with.leakage) / mean_power(&out_without.leakage),
        ),
    })
}

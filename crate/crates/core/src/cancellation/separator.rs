use std::io::Write;

use num_complex::Complex64;

use super::{
    fir_filter, CancellationConfig, LeakageChannel, Nlms, SeparatorKind, Transmitter, TxReference,
};
use crate::channel::RxComponents;
use crate::error::{ensure, Error, Result};
use crate::mac::MacState;
use crate::signal::{
    db_to_lin, derive_seed, mean_power, rng_from_seed, watts_to_dbm, ComplexGaussian, SampleBuffer,
};

/// Where the transmit chain is connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Antenna,
    DummyLoad,
}

impl Port {
    pub fn name(self) -> &'static str {
        match self {
            Port::Antenna => "antenna",
            Port::DummyLoad => "dummy_load",
        }
    }
}

/// Coefficients of the analog and digital cancellers of one receive chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CancellatorState {
    /// Complex gain applied to the tapped RF transmit signal and added to the receive path.
    pub analog_tap: Complex64,
    /// FIR model of the post-analog leakage in terms of the baseband transmit samples.
    pub digital_taps: Vec<Complex64>,
    pub calibrated_at: Option<f64>,
    port: Port,
}

impl CancellatorState {
    /// Uncalibrated state with the antenna connected.
    pub fn new(digital_taps: usize) -> Self {
        Self {
            analog_tap: Complex64::new(0.0, 0.0),
            digital_taps: vec![Complex64::new(0.0, 0.0); digital_taps],
            calibrated_at: None,
            port: Port::Antenna,
        }
    }

    pub fn port(&self) -> Port {
        self.port
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated_at.is_some()
    }

    /// Switches the transmit port to the dummy load ahead of calibration.
    pub fn begin_calibration(&mut self) {
        self.port = Port::DummyLoad;
    }

    /// Reconnects the antenna after calibration.
    pub fn end_calibration(&mut self) {
        self.port = Port::Antenna;
    }

    /// Whether the coefficients are older than `interval` seconds at time `now`.
    pub fn needs_recalibration(&self, now: f64, interval: f64) -> bool {
        match self.calibrated_at {
            Some(t) => now - t >= interval,
            None => true,
        }
    }
}

/// One line of the calibration log.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationEntry {
    pub time_s: f64,
    pub stage: &'static str,
    pub residual_dbm: f64,
    pub port: Port,
}

/// Writes entries as `time_s,stage,residual_dB,port` CSV with a header.
pub fn write_calibration_log<W: Write>(
    mut w: W,
    entries: &[CalibrationEntry],
) -> std::io::Result<()> {
    writeln!(w, "time_s,stage,residual_dB,port")?;
    for e in entries {
        writeln!(
            w,
            "{:.6},{},{:.3},{}",
            e.time_s,
            e.stage,
            e.residual_dbm,
            e.port.name()
        )?;
    }
    Ok(())
}

/// Attenuates the leakage component by the isolator's `isolation_db`; all other components pass unchanged.
///
/// Circulator and hybrid coupler are modelled with the same isolation.
pub fn first_stage(rx: &RxComponents, kind: SeparatorKind, isolation_db: f64) -> RxComponents {
    let _ = kind;
    let g = db_to_lin(-isolation_db).sqrt();
    RxComponents {
        leakage: rx.leakage.iter().map(|v| v * g).collect(),
        ..rx.clone()
    }
}

/// Least-squares analog tap and NLMS digital taps from `(transmission, received)` pairs.
///
/// Only the preamble span of each pair is used. The analog tap minimises
/// `|rx + g x_rf|^2` jointly over all pairs; the digital filter is then trained pass by
/// pass on the post-analog residual against the baseband preamble.
pub fn fit_cancellers(
    observations: &[(TxReference, Vec<Complex64>)],
    n_taps: usize,
    mu: f64,
) -> Result<(Complex64, Vec<Complex64>)> {
    ensure(!observations.is_empty(), || {
        "need at least one observation".to_string()
    })?;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (tx, rx) in observations {
        let n = tx.preamble_len.min(rx.len());
        for i in 0..n {
            num += tx.rf[i].conj() * rx[i];
            den += tx.rf[i].norm_sqr();
        }
    }
    let analog = if den > 0.0 {
        -num / den
    } else {
        Complex64::new(0.0, 0.0)
    };
    let mut lms = Nlms::new(n_taps, mu);
    for (tx, rx) in observations {
        let n = tx.preamble_len.min(rx.len());
        let residual: Vec<Complex64> = (0..n).map(|i| rx[i] + analog * tx.rf[i]).collect();
        lms.adapt(&tx.baseband[..n], &residual);
    }
    Ok((analog, lms.taps))
}

/// Fits the cancellers on the dummy load at time `t`.
///
/// The preamble is transmitted `calibration_passes` times into the load; the receiver sees
/// leakage plus noise only, so no reflection can be learned and later cancelled.
pub fn calibrate(
    state: &CancellatorState,
    preamble: &[Complex64],
    leak: &LeakageChannel,
    cfg: &CancellationConfig,
    t: f64,
    seed: u64,
) -> Result<(CancellatorState, Vec<CalibrationEntry>)> {
    if state.port != Port::DummyLoad {
        return Err(Error::ProtocolViolation(
            "calibration requires the transmit port on the dummy load".to_string(),
        ));
    }
    cfg.validate()?;
    let tx = Transmitter::from_config(cfg);
    let noise = ComplexGaussian::from_dbm(cfg.noise_floor_dbm)?;
    let mut obs = Vec::with_capacity(cfg.calibration_passes);
    for pass in 0..cfg.calibration_passes {
        let mut rng = rng_from_seed(derive_seed(seed, pass as u64));
        let reference = tx.emit(preamble, preamble.len(), &mut rng)?;
        let mut rx = leak.leak(&reference.rf, t, Port::DummyLoad);
        for v in rx.iter_mut() {
            *v += noise.sample(&mut rng);
        }
        obs.push((reference, rx));
    }
    let (analog, digital) = fit_cancellers(&obs, cfg.digital_taps, cfg.lms_mu)?;

    let (last_tx, last_rx) = obs.last().expect("at least one pass");
    let after_analog: Vec<Complex64> = last_rx
        .iter()
        .zip(&last_tx.rf)
        .map(|(r, x)| r + analog * x)
        .collect();
    let model = fir_filter(&digital, &last_tx.baseband);
    let after_digital: Vec<Complex64> = after_analog
        .iter()
        .zip(&model)
        .map(|(r, m)| r - m)
        .collect();
    let log = vec![
        CalibrationEntry {
            time_s: t,
            stage: "analog",
            residual_dbm: watts_to_dbm(mean_power(&after_analog)),
            port: Port::DummyLoad,
        },
        CalibrationEntry {
            time_s: t,
            stage: "digital",
            residual_dbm: watts_to_dbm(mean_power(&after_digital)),
            port: Port::DummyLoad,
        },
    ];
    Ok((
        CancellatorState {
            analog_tap: analog,
            digital_taps: digital,
            calibrated_at: Some(t),
            port: Port::DummyLoad,
        },
        log,
    ))
}

/// Full self-adapted calibration: switch to the dummy load, calibrate, reconnect the antenna.
pub fn calibration_protocol(
    state: &CancellatorState,
    preamble: &[Complex64],
    leak: &LeakageChannel,
    cfg: &CancellationConfig,
    t: f64,
    seed: u64,
) -> Result<(CancellatorState, Vec<CalibrationEntry>)> {
    let mut s = state.clone();
    s.begin_calibration();
    let (mut s, log) = calibrate(&s, preamble, leak, cfg, t, seed)?;
    s.end_calibration();
    Ok((s, log))
}

/// Adds the analog cancellation signal `g_A x_rf`. The injected signal is booked against leakage.
pub fn analog_cancel(
    rx: &RxComponents,
    tx: &TxReference,
    state: &CancellatorState,
) -> RxComponents {
    let mut out = rx.clone();
    for (v, x) in out.leakage.iter_mut().zip(&tx.rf) {
        *v += state.analog_tap * x;
    }
    out
}

/// Subtracts the digital leakage model `G_D * preamble_ref` from `rx`.
///
/// `preamble_ref` must be aligned with `rx`; it is zero-extended if shorter.
pub fn digital_cancel(
    rx: &SampleBuffer,
    preamble_ref: &SampleBuffer,
    state: &CancellatorState,
) -> Result<SampleBuffer> {
    if !state.is_calibrated() {
        return Err(Error::ProtocolViolation(
            "digital canceller used before calibration".to_string(),
        ));
    }
    let mut reference = preamble_ref.samples().to_vec();
    reference.resize(rx.len(), Complex64::new(0.0, 0.0));
    let model = fir_filter(&state.digital_taps, &reference);
    let out = rx
        .samples()
        .iter()
        .zip(&model)
        .map(|(r, m)| r - m)
        .collect();
    SampleBuffer::new(out, rx.sample_rate(), rx.start_time())
}

fn digital_cancel_components(
    rx: &RxComponents,
    tx: &TxReference,
    state: &CancellatorState,
) -> RxComponents {
    let mut reference = tx.baseband.clone();
    reference.resize(rx.len(), Complex64::new(0.0, 0.0));
    let model = fir_filter(&state.digital_taps, &reference);
    let mut out = rx.clone();
    for (v, m) in out.leakage.iter_mut().zip(&model) {
        *v -= m;
    }
    out
}

/// Output of [`separator_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorOutput {
    pub components: Vec<RxComponents>,
    /// Whether cancellation was applied (only in the monostatic state).
    pub applied: bool,
}

/// Runs the separator on per-antenna receptions according to the MAC state.
///
/// In the monostatic state every chain applies first-stage isolation, the analog canceller
/// and the digital canceller (aligned to the own transmission). In the other states the
/// input is passed through untouched; asking for cancellation there (`force`) is a
/// protocol violation.
pub fn separator_pipeline(
    rx: &[RxComponents],
    tx: &TxReference,
    states: &[CancellatorState],
    mode: &MacState,
    force: bool,
    cfg: &CancellationConfig,
) -> Result<SeparatorOutput> {
    if !matches!(mode, MacState::Monostatic { .. }) {
        if force {
            return Err(Error::ProtocolViolation(format!(
                "cancellation forced while in state {}",
                mode.label()
            )));
        }
        return Ok(SeparatorOutput {
            components: rx.to_vec(),
            applied: false,
        });
    }
    ensure(rx.len() == states.len(), || {
        format!(
            "{} receive chains but {} cancellers",
            rx.len(),
            states.len()
        )
    })?;
    let mut out = Vec::with_capacity(rx.len());
    for (chain, state) in rx.iter().zip(states) {
        if !state.is_calibrated() {
            return Err(Error::ProtocolViolation(
                "separator used before calibration".to_string(),
            ));
        }
        if state.port() != Port::Antenna {
            return Err(Error::ProtocolViolation(
                "separator used while on the dummy load".to_string(),
            ));
        }
        let s1 = first_stage(chain, cfg.separator, cfg.isolation_db);
        let s2 = analog_cancel(&s1, tx, state);
        out.push(digital_cancel_components(&s2, tx, state));
    }
    Ok(SeparatorOutput {
        components: out,
        applied: true,
    })
}

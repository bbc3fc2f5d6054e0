use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure, Result};
use crate::ofdm::{Packet, Preamble, RadioConfig};
use crate::signal::{fft, ifft_in_place, SampleBuffer};

/// Random-walk rates for slow drift of the clock offsets (standard deviation per sqrt(second)).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftModel {
    pub cfo_hz: f64,
    pub cpo_rad: f64,
    pub sfo: f64,
}

/// Clock offsets between a transmitter and a receiver.
///
/// `sfo` is `(T_s - T_s') / T_s'` with `T_s` the receiver and `T_s'` the transmitter
/// sampling period; `pdd_samples` is the packet detection delay in samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImpairmentProfile {
    pub cfo_hz: f64,
    pub cpo_rad: f64,
    pub sfo: f64,
    pub pdd_samples: f64,
    pub drift: Option<DriftModel>,
}

impl ImpairmentProfile {
    pub fn new(cfo_hz: f64, cpo_rad: f64, sfo: f64, pdd_samples: f64) -> Result<Self> {
        ensure(
            cfo_hz.is_finite() && cpo_rad.is_finite() && pdd_samples.is_finite(),
            || "impairments must be finite".to_string(),
        )?;
        ensure(sfo.abs() < 1e-3, || {
            format!("|SFO| must stay below 1e-3, got {sfo}")
        })?;
        Ok(Self {
            cfo_hz,
            cpo_rad: cpo_rad.rem_euclid(2.0 * PI),
            sfo,
            pdd_samples,
            drift: None,
        })
    }

    /// No offsets at all.
    pub fn none() -> Self {
        Self::default()
    }

    /// Transmitter and receiver share one clock: only a constant phase remains.
    pub fn monostatic(cpo_rad: f64) -> Self {
        Self {
            cpo_rad: cpo_rad.rem_euclid(2.0 * PI),
            ..Self::default()
        }
    }

    /// Offsets of an independent transmitter after boot: CFO and SFO uniform within
    /// +-`ppm` parts per million, CPO uniform in `[0, 2 pi)`.
    pub fn random_boot<R: Rng + ?Sized>(rng: &mut R, cfg: &RadioConfig, ppm: f64) -> Self {
        let tol = ppm * 1e-6;
        Self {
            cfo_hz: rng.random_range(-tol..=tol) * cfg.carrier_freq(),
            cpo_rad: rng.random_range(0.0..2.0 * PI),
            sfo: rng.random_range(-tol..=tol),
            pdd_samples: 0.0,
            drift: None,
        }
    }

    pub fn with_drift(mut self, drift: DriftModel) -> Self {
        self.drift = Some(drift);
        self
    }

    /// True when the profile describes a shared clock (no CFO, SFO or PDD).
    pub fn is_shared_clock(&self) -> bool {
        self.cfo_hz == 0.0 && self.sfo == 0.0 && self.pdd_samples == 0.0
    }

    /// Phase added to CSI on subcarrier `k` of OFDM symbol `l`:
    /// `-2 pi (l cfo / (df N) + cpo) - 2 pi k (sfo + pdd) / N`.
    pub fn csi_phase(&self, k: i32, l: usize, cfg: &RadioConfig) -> f64 {
        let n = cfg.fft_size() as f64;
        -2.0 * PI * (l as f64 * self.cfo_hz / (cfg.subcarrier_spacing() * n) + self.cpo_rad)
            - 2.0 * PI * k as f64 * (self.sfo + self.pdd_samples) / n
    }

    /// Advances the offsets by `dt` seconds of random-walk drift. Without a drift model the profile is unchanged.
    pub fn evolve<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Self {
        let Some(d) = self.drift else { return *self };
        let step = |sigma: f64, rng: &mut R| {
            if sigma > 0.0 && dt > 0.0 {
                Normal::new(0.0, sigma * dt.sqrt())
                    .map(|n| n.sample(rng))
                    .unwrap_or(0.0)
            } else {
                0.0
            }
        };
        let mut next = *self;
        next.cfo_hz += step(d.cfo_hz, rng);
        next.cpo_rad = (next.cpo_rad + step(d.cpo_rad, rng)).rem_euclid(2.0 * PI);
        next.sfo = (next.sfo + step(d.sfo, rng)).clamp(-9.99e-4, 9.99e-4);
        next
    }

    /// Applies SFO (resampling by `1 + sfo`), then CFO and CPO as `exp(-j 2 pi (cfo t + cpo))`.
    ///
    /// `t0` is the absolute time of the first sample.
    pub fn apply_time_domain(&self, x: &[Complex64], sample_rate: f64, t0: f64) -> Vec<Complex64> {
        let resampled = if self.sfo != 0.0 {
            resample(x, 1.0 + self.sfo)
        } else {
            x.to_vec()
        };
        resampled
            .iter()
            .enumerate()
            .map(|(n, &v)| {
                let t = t0 + n as f64 / sample_rate;
                v * Complex64::from_polar(1.0, -2.0 * PI * (self.cfo_hz * t + self.cpo_rad))
            })
            .collect()
    }
}

const SINC_HALF_WIDTH: isize = 24;

/// `y[n] = x(n * ratio)` by Blackman-windowed sinc interpolation; samples outside `x` are zero.
fn resample(x: &[Complex64], ratio: f64) -> Vec<Complex64> {
    let h = SINC_HALF_WIDTH as f64;
    (0..x.len())
        .map(|n| {
            let u = n as f64 * ratio;
            let c = u.floor() as isize;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in (c - SINC_HALF_WIDTH + 1)..=(c + SINC_HALF_WIDTH) {
                if k < 0 || k as usize >= x.len() {
                    continue;
                }
                let d = u - k as f64;
                let sinc = if d.abs() < 1e-12 {
                    1.0
                } else {
                    (PI * d).sin() / (PI * d)
                };
                let w = 0.42 + 0.5 * (PI * d / h).cos() + 0.08 * (2.0 * PI * d / h).cos();
                acc += x[k as usize] * (sinc * w);
            }
            acc
        })
        .collect()
}

fn symbol_from_spectrum(values: &[Complex64], cfg: &RadioConfig) -> Vec<Complex64> {
    let mut bins = vec![Complex64::new(0.0, 0.0); cfg.fft_size()];
    for (&k, &v) in cfg.used_subcarriers().iter().zip(values) {
        bins[cfg.bin(k)] = v;
    }
    ifft_in_place(&mut bins);
    bins
}

/// Rebuilds `packet` symbol by symbol with a per-subcarrier `channel` and the offsets of
/// `imp` applied exactly as [`ImpairmentProfile::csi_phase`] in the frequency domain.
///
/// Symbol index 0 and 1 are the long training symbols and data symbols follow; the short
/// training section carries the index-0 phase. CSI extracted from the result at the packet
/// start equals `channel[k] * exp(j csi_phase(k, l))`.
pub fn impaired_packet(
    packet: &Packet,
    channel: &[Complex64],
    imp: &ImpairmentProfile,
    cfg: &RadioConfig,
) -> Result<SampleBuffer> {
    let used = cfg.used_subcarriers();
    ensure(channel.len() == used.len(), || {
        format!(
            "channel has {} taps for {} subcarriers",
            channel.len(),
            used.len()
        )
    })?;
    let n = cfg.fft_size();
    let pre = Preamble::new(cfg);
    let rotate = |values: &[Complex64], l: usize| -> Vec<Complex64> {
        used.iter()
            .zip(values)
            .zip(channel)
            .map(|((&k, &v), &h)| v * h * Complex64::from_polar(1.0, imp.csi_phase(k, l, cfg)))
            .collect()
    };

    // One period-N block of the short section, reshaped in frequency and tiled back.
    let short_spec = fft(&pre.samples()[..n], n);
    let short_vals: Vec<Complex64> = used.iter().map(|&k| short_spec[cfg.bin(k)]).collect();
    let short_block = symbol_from_spectrum(&rotate(&short_vals, 0), cfg);
    let mut out = Vec::with_capacity(packet.buffer.len());
    let short_len = pre.long_offset() - n / 2;
    for i in 0..short_len {
        out.push(short_block[i % n]);
    }
    let lt1 = symbol_from_spectrum(&rotate(pre.long_reference(), 0), cfg);
    let lt2 = symbol_from_spectrum(&rotate(pre.long_reference(), 1), cfg);
    out.extend_from_slice(&lt1[n / 2..]);
    out.extend_from_slice(&lt1);
    out.extend_from_slice(&lt2);

    let scale = n as f64 / (used.len() as f64).sqrt();
    for (l, sym) in packet.symbols.iter().enumerate() {
        let scaled: Vec<Complex64> = sym.iter().map(|v| v * scale).collect();
        let body = symbol_from_spectrum(&rotate(&scaled, l + 2), cfg);
        out.extend_from_slice(&body[n - cfg.cp_len()..]);
        out.extend_from_slice(&body);
    }
    SampleBuffer::new(out, cfg.sample_rate(), packet.buffer.start_time())
}

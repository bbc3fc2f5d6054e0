use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::music::parabolic_offset;
use super::{admm_lasso, default_lambda, AdmmOptions, DenseOperator, SparseOptions, TxSchedule};
use crate::error::{ensure, invalid, Result};
use crate::ofdm::{CsiMatrix, RadioConfig};
use crate::signal::{fft, Spectrogram};

/// Doppler power spectrum of a CSI series sampled at `rate_hz`, summed incoherently over
/// subcarriers and antenna pairs. Returns `(frequencies, power)` ascending in frequency.
pub fn doppler_spectrum(csi_series: &[CsiMatrix], rate_hz: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure(csi_series.len() >= 2, || {
        "need at least 2 packets".to_string()
    })?;
    let first = &csi_series[0];
    let n_sc = first.subcarriers().len();
    let nfft = (csi_series.len().next_power_of_two() * 8).max(256);
    let mut power = vec![0.0; nfft];
    for rx in 0..first.n_rx() {
        for tx in 0..first.n_tx() {
            for k in 0..n_sc {
                let slow: Vec<Complex64> = csi_series.iter().map(|c| c.get(rx, tx, k)).collect();
                // Atoms rotate as exp(+j 2 pi f t); the forward transform peaks at +f.
                for (p, v) in power.iter_mut().zip(fft(&slow, nfft)) {
                    *p += v.norm_sqr();
                }
            }
        }
    }
    let half = nfft / 2;
    let freqs = (0..nfft)
        .map(|i| (i as f64 - half as f64) * rate_hz / nfft as f64)
        .collect();
    let shifted = (0..nfft).map(|i| power[(i + half) % nfft]).collect();
    Ok((freqs, shifted))
}

fn peak_velocity(csi_series: &[CsiMatrix], rate_hz: f64, cfg: &RadioConfig) -> Result<f64> {
    let (freqs, power) = doppler_spectrum(csi_series, rate_hz)?;
    let i = power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let step = freqs[1] - freqs[0];
    let f = freqs[i] + parabolic_offset(&power, i) * step;
    Ok(f * cfg.wavelength() / 2.0)
}

/// FFT Doppler baseline: radial velocity (m/s, positive approaching) of the spectral peak.
///
/// Only defined for uniform schedules (gaps within 1% of their mean). Speeds beyond
/// `rate * wavelength / 4` alias.
pub fn velocity_fft(
    csi_series: &[CsiMatrix],
    sched: &TxSchedule,
    cfg: &RadioConfig,
) -> Result<f64> {
    ensure(csi_series.len() == sched.len(), || {
        "one CSI entry per scheduled packet required".to_string()
    })?;
    if !sched.is_uniform(0.01) {
        return invalid("FFT velocity needs a uniform packet schedule");
    }
    peak_velocity(csi_series, sched.mean_rate(), cfg)
}

/// FFT baseline applied to an irregular series as if it were sampled uniformly at the mean rate.
pub fn velocity_fft_naive(
    csi_series: &[CsiMatrix],
    sched: &TxSchedule,
    cfg: &RadioConfig,
) -> Result<f64> {
    ensure(csi_series.len() == sched.len(), || {
        "one CSI entry per scheduled packet required".to_string()
    })?;
    peak_velocity(csi_series, sched.mean_rate(), cfg)
}

/// Short-time Doppler spectrum of irregularly timed samples by per-frame sparse recovery.
///
/// Each frame of `window_len` consecutive samples is fitted as a sparse sum of tones
/// `exp(j 2 pi f (t - t_0))` over `freqs` with the ADMM lasso; bins hold `|x_f|^2`. Unlike a
/// nonuniform DFT, aliases of the sampling pattern are not reported as energy.
pub fn sparse_spectrogram(
    times: &[f64],
    values: &[Complex64],
    window_len: usize,
    hop: usize,
    freqs: &[f64],
    opts: &SparseOptions,
) -> Result<Spectrogram> {
    ensure(window_len > 1 && hop > 0, || {
        "window needs at least two samples and a positive hop".to_string()
    })?;
    ensure(times.len() == values.len(), || {
        "times and values differ in length".to_string()
    })?;
    ensure(!freqs.is_empty(), || "empty frequency grid".to_string())?;
    ensure(times.len() >= window_len, || {
        format!(
            "{} samples is fewer than the window {window_len}",
            times.len()
        )
    })?;
    let mut bins = Vec::new();
    let mut time_axis = Vec::new();
    let mut start = 0;
    while start + window_len <= times.len() {
        let t = &times[start..start + window_len];
        let y = &values[start..start + window_len];
        let a = DMatrix::from_fn(window_len, freqs.len(), |n, f| {
            Complex64::from_polar(1.0, 2.0 * PI * freqs[f] * (t[n] - t[0]))
        });
        let op = DenseOperator::new(a);
        let lambda = default_lambda(&op, y, opts.lambda_frac);
        let power = if lambda > 0.0 {
            let res = admm_lasso(
                &op,
                y,
                &AdmmOptions {
                    lambda,
                    rho: opts.rho,
                    max_iter: opts.max_iter,
                    tol: opts.tol,
                    adaptive_rho: false,
                },
            )?;
            res.x.iter().map(|c| c.norm_sqr()).collect()
        } else {
            vec![0.0; freqs.len()]
        };
        bins.push(power);
        time_axis.push(0.5 * (t[0] + t[window_len - 1]));
        start += hop;
    }
    Ok(Spectrogram {
        bins,
        freq_axis: freqs.to_vec(),
        time_axis,
    })
}

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure, Result};
use crate::signal::{fft, fftshift_freqs, nonuniform_dft, SampleBuffer};

/// Analysis window applied to each STFT frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Weight at relative position `u` in `[0, 1]` across the frame.
    pub fn at(self, u: f64) -> f64 {
        match self {
            Window::Hann => 0.5 - 0.5 * (2.0 * PI * u).cos(),
            Window::Rectangular => 1.0,
        }
    }

    /// Periodic weights for an `n`-point uniform frame.
    pub fn weights(self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.at(i as f64 / n as f64)).collect()
    }
}

/// Power of a short-time spectrum: `bins[frame][freq]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub bins: Vec<Vec<f64>>,
    pub freq_axis: Vec<f64>,
    pub time_axis: Vec<f64>,
}

impl Spectrogram {
    /// Fraction of the total power that falls in `[lo, hi]` Hz (all frames pooled).
    pub fn band_energy_fraction(&self, lo: f64, hi: f64) -> f64 {
        let mut inside = 0.0;
        let mut total = 0.0;
        for frame in &self.bins {
            for (p, &f) in frame.iter().zip(&self.freq_axis) {
                total += p;
                if f >= lo && f <= hi {
                    inside += p;
                }
            }
        }
        if total > 0.0 {
            inside / total
        } else {
            0.0
        }
    }

    /// Frequency of the strongest bin in each frame.
    pub fn peak_freqs(&self) -> Vec<f64> {
        self.bins
            .iter()
            .map(|frame| {
                let (i, _) =
                    frame
                        .iter()
                        .enumerate()
                        .fold(
                            (0, f64::NEG_INFINITY),
                            |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc },
                        );
                self.freq_axis[i]
            })
            .collect()
    }
}

/// Short-time Fourier transform of a uniformly sampled buffer.
///
/// Frames of `window_len` samples advance by `hop`; each frame is transformed with a
/// `window_len`-point FFT. The frequency axis runs from `-fs/2` upwards and the time axis
/// holds frame centres.
pub fn stft(
    buf: &SampleBuffer,
    window_len: usize,
    hop: usize,
    window: Window,
) -> Result<Spectrogram> {
    ensure(window_len > 0 && hop > 0, || {
        "window length and hop must be positive".to_string()
    })?;
    ensure(buf.len() >= window_len, || {
        format!(
            "buffer of {} samples is shorter than the window {window_len}",
            buf.len()
        )
    })?;
    let w = window.weights(window_len);
    let axis = fftshift_freqs(window_len, buf.sample_rate());
    let x = buf.samples();
    let mut bins = Vec::new();
    let mut time_axis = Vec::new();
    let mut start = 0;
    while start + window_len <= x.len() {
        let frame: Vec<Complex64> = x[start..start + window_len]
            .iter()
            .zip(&w)
            .map(|(s, &g)| s * g)
            .collect();
        let spec = fft(&frame, window_len);
        bins.push(axis.iter().map(|&(b, _)| spec[b].norm_sqr()).collect());
        time_axis.push(buf.time_of(start) + 0.5 * window_len as f64 / buf.sample_rate());
        start += hop;
    }
    Ok(Spectrogram {
        bins,
        freq_axis: axis.iter().map(|&(_, f)| f).collect(),
        time_axis,
    })
}

/// STFT of irregularly timed samples evaluated with a per-frame nonuniform DFT.
///
/// Frames hold `window_len` consecutive samples and advance by `hop` samples. The window
/// is evaluated at each sample's relative time within its frame, so uneven spacing is
/// accounted for rather than ignored.
pub fn stft_nonuniform(
    times: &[f64],
    values: &[Complex64],
    window_len: usize,
    hop: usize,
    freqs: &[f64],
    window: Window,
) -> Result<Spectrogram> {
    ensure(window_len > 1 && hop > 0, || {
        "window needs at least two samples and a positive hop".to_string()
    })?;
    ensure(times.len() == values.len(), || {
        "times and values differ in length".to_string()
    })?;
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
        let span = t[window_len - 1] - t[0];
        ensure(span > 0.0, || "frame spans zero time".to_string())?;
        let frame: Vec<Complex64> = t
            .iter()
            .zip(&values[start..start + window_len])
            .map(|(&ti, &v)| v * window.at((ti - t[0]) / span))
            .collect();
        let spec = nonuniform_dft(t, &frame, freqs)?;
        bins.push(spec.iter().map(|c| c.norm_sqr()).collect());
        time_axis.push(0.5 * (t[0] + t[window_len - 1]));
        start += hop;
    }
    Ok(Spectrogram {
        bins,
        freq_axis: freqs.to_vec(),
        time_axis,
    })
}

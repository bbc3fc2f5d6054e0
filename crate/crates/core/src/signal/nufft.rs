use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure, Result};
use crate::signal::fft_in_place;

/// Direct nonuniform DFT: `c(f) = sum_m x_m exp(-j 2 pi f t_m)` for each requested `f`.
///
/// Cost is `O(len(times) * len(freqs))`. Serves as the reference for [`nfft`].
pub fn nonuniform_dft(
    times: &[f64],
    values: &[Complex64],
    freqs: &[f64],
) -> Result<Vec<Complex64>> {
    check_samples(times, values)?;
    ensure(freqs.iter().all(|f| f.is_finite()), || {
        "frequencies must be finite".to_string()
    })?;
    let t0 = times.first().copied().unwrap_or(0.0);
    Ok(freqs
        .iter()
        .map(|&f| {
            // Referencing times to t0 keeps the argument small; the common phase is restored after.
            let acc: Complex64 = times
                .iter()
                .zip(values)
                .map(|(&t, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * f * (t - t0)))
                .sum();
            acc * Complex64::from_polar(1.0, -2.0 * PI * f * t0)
        })
        .collect())
}

fn check_samples(times: &[f64], values: &[Complex64]) -> Result<()> {
    ensure(times.len() == values.len(), || {
        format!("{} times but {} values", times.len(), values.len())
    })?;
    ensure(times.iter().all(|t| t.is_finite()), || {
        "sample times must be finite".to_string()
    })?;
    ensure(times.windows(2).all(|w| w[1] > w[0]), || {
        "sample times must be strictly increasing".to_string()
    })
}

/// An evenly spaced frequency grid `start + q * step`, `q = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        ensure(start.is_finite() && step.is_finite() && step > 0.0, || {
            format!("grid needs finite start and positive step, got {start}, {step}")
        })?;
        Ok(Self { start, step, len })
    }

    /// Grid spanning `[-max, max]` with spacing `step` (inclusive when `max/step` is integral).
    pub fn symmetric(max: f64, step: f64) -> Result<Self> {
        let half = (max / step + 1e-9).floor() as usize;
        Self::new(-(half as f64) * step, step, 2 * half + 1)
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.len)
            .map(|q| self.start + q as f64 * self.step)
            .collect()
    }
}

const OVERSAMPLING: usize = 2;
const SPREAD: isize = 14;
const MIN_MODES: usize = 32;

/// Fast evaluation of [`nonuniform_dft`] on a uniform frequency grid.
///
/// Uses Gaussian gridding onto an oversampled uniform grid followed by an FFT and
/// deconvolution, giving relative accuracy around 1e-12 at `O(M log M + 28 len(times))` cost.
pub fn nfft(times: &[f64], values: &[Complex64], grid: &UniformGrid) -> Result<Vec<Complex64>> {
    check_samples(times, values)?;
    if grid.len == 0 {
        return Ok(Vec::new());
    }
    if times.is_empty() {
        return Ok(vec![Complex64::new(0.0, 0.0); grid.len]);
    }
    let t_ref = times[0];
    let mut modes = grid.len.max(MIN_MODES);
    modes += modes % 2;
    let half = (modes / 2) as f64;
    let mr = OVERSAMPLING * modes;
    let r = OVERSAMPLING as f64;
    let tau = PI * SPREAD as f64 / ((modes * modes) as f64 * r * (r - 0.5));

    // Map each sample onto the unit circle and fold the grid offset and centring into its weight.
    let mut spread = vec![Complex64::new(0.0, 0.0); mr];
    let h = 2.0 * PI / mr as f64;
    for (&t, &v) in times.iter().zip(values) {
        let tr = t - t_ref;
        let x = (2.0 * PI * grid.step * tr).rem_euclid(2.0 * PI);
        let c = v
            * Complex64::from_polar(1.0, -2.0 * PI * grid.start * tr)
            * Complex64::from_polar(1.0, -half * x);
        let m0 = (x / h).floor() as isize;
        for m in (m0 - SPREAD + 1)..=(m0 + SPREAD) {
            let d = x - h * m as f64;
            let w = (-d * d / (4.0 * tau)).exp();
            spread[m.rem_euclid(mr as isize) as usize] += c * w;
        }
    }
    fft_in_place(&mut spread);
    let scale = (PI / tau).sqrt() / mr as f64;
    Ok((0..grid.len)
        .map(|q| {
            let k = q as f64 - half;
            let idx = (k as isize).rem_euclid(mr as isize) as usize;
            let f = grid.start + q as f64 * grid.step;
            spread[idx]
                * scale
                * (k * k * tau).exp()
                * Complex64::from_polar(1.0, -2.0 * PI * f * t_ref)
        })
        .collect())
}

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{ensure, Result};
use crate::signal::SampleBuffer;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalised forward DFT, `X[k] = sum_n x[n] exp(-j 2 pi k n / N)`, in place.
pub fn fft_in_place(x: &mut [Complex64]) {
    if x.len() <= 1 {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(x.len()));
    plan.process(x);
}

/// Inverse DFT scaled by `1/N`, so that `ifft(fft(x)) == x`, in place.
pub fn ifft_in_place(x: &mut [Complex64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len();
    if n > 1 {
        let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
        plan.process(x);
    }
    let scale = 1.0 / n as f64;
    for v in x.iter_mut() {
        *v *= scale;
    }
}

/// Forward DFT of `x`, zero-padded or truncated to `size` points.
pub fn fft(x: &[Complex64], size: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    let n = x.len().min(size);
    buf[..n].copy_from_slice(&x[..n]);
    fft_in_place(&mut buf);
    buf
}

/// Inverse DFT (scaled by `1/N`) of `x`.
pub fn ifft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    ifft_in_place(&mut buf);
    buf
}

/// `size`-point DFT of the first `size` samples of `buf`.
pub fn spectrum(buf: &SampleBuffer, size: usize) -> Result<Vec<Complex64>> {
    ensure(size >= 1, || "FFT size must be at least 1".to_string())?;
    ensure(buf.len() >= size, || {
        format!(
            "buffer of {} samples is shorter than the FFT size {size}",
            buf.len()
        )
    })?;
    Ok(fft(&buf.samples()[..size], size))
}

/// Frequencies of DFT bins reordered from most negative to most positive.
///
/// Bin `k` of an `n`-point DFT at rate `fs` maps to `k fs / n` for `k < n/2` (rounded up)
/// and to `(k - n) fs / n` otherwise. The returned vector pairs each frequency with its bin.
pub fn fftshift_freqs(n: usize, fs: f64) -> Vec<(usize, f64)> {
    let half = n / 2;
    (0..n)
        .map(|i| {
            let signed = i as isize - half as isize;
            let bin = signed.rem_euclid(n as isize) as usize;
            (bin, signed as f64 * fs / n as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_dft() {
        let x: Vec<Complex64> = (0..12)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let got = fft(&x, 12);
        for (k, g) in got.iter().enumerate() {
            let want: Complex64 = x
                .iter()
                .enumerate()
                .map(|(n, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / 12.0))
                .sum();
            assert!((g - want).norm() < 1e-12);
        }
        let back = ifft(&got);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn shifted_axis() {
        let f = fftshift_freqs(4, 4.0);
        assert_eq!(f, vec![(2, -2.0), (3, -1.0), (0, 0.0), (1, 1.0)]);
    }
}

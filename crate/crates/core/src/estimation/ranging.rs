use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::music::{add_outer, pseudospectrum, top_peaks};
use crate::error::{ensure, Result};
use crate::ofdm::{CsiMatrix, RadioConfig};
use crate::signal::ifft_in_place;
use crate::SPEED_OF_LIGHT;

/// Monostatic range of a round-trip delay.
pub fn delay_to_range(delay: f64) -> f64 {
    SPEED_OF_LIGHT * delay / 2.0
}

/// Power delay profile from an N-point inverse FFT of the CSI, averaged over packets and
/// antenna pairs. Bin `n` corresponds to delay `n / fs`.
pub fn ifft_delay_profile(csi: &[CsiMatrix], cfg: &RadioConfig) -> Result<Vec<f64>> {
    ensure(!csi.is_empty(), || "no CSI".to_string())?;
    let n = cfg.fft_size();
    let mut profile = vec![0.0; n];
    for c in csi {
        ensure(c.subcarriers().len() >= 2, || {
            "need at least 2 subcarriers".to_string()
        })?;
        for rx in 0..c.n_rx() {
            for tx in 0..c.n_tx() {
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for (&k, &v) in c.subcarriers().iter().zip(c.row(rx, tx)) {
                    buf[cfg.bin(k)] = v;
                }
                ifft_in_place(&mut buf);
                for (p, v) in profile.iter_mut().zip(&buf) {
                    *p += v.norm_sqr();
                }
            }
        }
    }
    Ok(profile)
}

/// IFFT ranging: delay of the strongest bin in the causal half of the profile.
///
/// Resolution is one bin, `c / (2 B)` in range with `B` the sample rate.
pub fn range_ifft(csi: &[CsiMatrix], cfg: &RadioConfig) -> Result<f64> {
    let profile = ifft_delay_profile(csi, cfg)?;
    let half = &profile[..cfg.fft_size() / 2];
    let peak = half
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(delay_to_range(peak as f64 / cfg.sample_rate()))
}

/// Result of [`range_music`]: paths ordered by fitted power, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicRanging {
    pub delays: Vec<f64>,
    pub ranges: Vec<f64>,
    pub powers: Vec<f64>,
    /// Covariance looked rank deficient for the requested model order.
    pub degraded: bool,
    pub pseudospectrum: Vec<f64>,
}

/// CSI on a contiguous subcarrier run; missing subcarriers (DC) are filled with the mean of their neighbours.
fn contiguous(c: &CsiMatrix, rx: usize, tx: usize) -> (i32, Vec<Complex64>) {
    let sc = c.subcarriers();
    let row = c.row(rx, tx);
    let lo = *sc.iter().min().expect("non-empty");
    let hi = *sc.iter().max().expect("non-empty");
    let mut out: Vec<Option<Complex64>> = vec![None; (hi - lo + 1) as usize];
    for (&k, &v) in sc.iter().zip(row) {
        out[(k - lo) as usize] = Some(v);
    }
    let filled = (0..out.len())
        .map(|i| match out[i] {
            Some(v) => v,
            None => {
                let l = out[..i].iter().rev().flatten().next();
                let r = out[i + 1..].iter().flatten().next();
                match (l, r) {
                    (Some(a), Some(b)) => (a + b) / 2.0,
                    (Some(a), None) | (None, Some(a)) => *a,
                    (None, None) => Complex64::new(0.0, 0.0),
                }
            }
        })
        .collect();
    (lo, filled)
}

/// Forward-backward subband covariance over every packet and antenna pair, plus the full-band rows.
fn smoothed_covariance(
    csi: &[CsiMatrix],
    n_sc: usize,
    sub: usize,
) -> Result<(DMatrix<Complex64>, Vec<Vec<Complex64>>)> {
    let mut cov = DMatrix::<Complex64>::zeros(sub, sub);
    let mut full = Vec::new();
    for c in csi {
        for rx in 0..c.n_rx() {
            for tx in 0..c.n_tx() {
                let (_, h) = contiguous(c, rx, tx);
                ensure(h.len() == n_sc, || {
                    "all CSI entries must share one subcarrier set".to_string()
                })?;
                for s in 0..=(n_sc - sub) {
                    let fwd = &h[s..s + sub];
                    add_outer(&mut cov, fwd);
                    let bwd: Vec<Complex64> = fwd.iter().rev().map(|v| v.conj()).collect();
                    add_outer(&mut cov, &bwd);
                }
                full.push(h);
            }
        }
    }
    Ok((cov, full))
}

/// Minimum description length model order from covariance eigenvalues and a snapshot count.
///
/// Returns the `k` in `0..p` minimising
/// `-N (p - k) ln(g_k / a_k) + k (2p - k) ln(N) / 2`, where `g_k` and `a_k` are the geometric
/// and arithmetic means of the `p - k` smallest eigenvalues.
pub fn mdl_order(eigenvalues: &[f64], snapshots: usize) -> usize {
    let mut ev: Vec<f64> = eigenvalues.iter().map(|v| v.max(1e-300)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let p = ev.len();
    let n = snapshots.max(1) as f64;
    (0..p)
        .map(|k| {
            let tail = &ev[k..];
            let m = tail.len() as f64;
            let log_geo = tail.iter().map(|v| v.ln()).sum::<f64>() / m;
            let arith = tail.iter().sum::<f64>() / m;
            let fit = -n * m * (log_geo - arith.ln());
            let penalty = 0.5 * k as f64 * (2.0 * p as f64 - k as f64) * n.ln();
            (k, fit + penalty)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .unwrap_or(0)
}

/// Blind path count for [`range_music`] by MDL on the smoothed covariance, clamped to `1..subband`.
pub fn estimate_path_count(csi: &[CsiMatrix]) -> Result<usize> {
    ensure(!csi.is_empty(), || "no CSI".to_string())?;
    let (_, probe) = contiguous(&csi[0], 0, 0);
    let n_sc = probe.len();
    let sub = n_sc / 2;
    ensure(sub >= 2, || "too few subcarriers".to_string())?;
    let (cov, full) = smoothed_covariance(csi, n_sc, sub)?;
    let eig = nalgebra::SymmetricEigen::new(cov);
    let snapshots = full.len() * 2 * (n_sc - sub + 1);
    Ok(mdl_order(eig.eigenvalues.as_slice(), snapshots).clamp(1, sub - 1))
}

/// Subspace ranging with frequency smoothing.
///
/// The CSI of every packet and antenna pair is split into overlapping subbands of half the
/// band (forward and backward), whose covariance feeds MUSIC over `delay_grid`. Path powers
/// from a least-squares fit at the picked delays order the output.
pub fn range_music(
    csi: &[CsiMatrix],
    n_paths: usize,
    cfg: &RadioConfig,
    delay_grid: &[f64],
) -> Result<MusicRanging> {
    ensure(n_paths >= 1, || "need at least one path".to_string())?;
    ensure(!csi.is_empty(), || "no CSI".to_string())?;
    ensure(!delay_grid.is_empty(), || "empty delay grid".to_string())?;
    let (_, probe) = contiguous(&csi[0], 0, 0);
    let n_sc = probe.len();
    let sub = n_sc / 2;
    ensure(n_paths < sub, || {
        format!("{n_paths} paths need more than {sub} subcarriers per subband")
    })?;
    let df = cfg.subcarrier_spacing();

    let (cov, full) = smoothed_covariance(csi, n_sc, sub)?;
    let steer = |tau: f64, len: usize| {
        DVector::from_fn(len, |m, _| {
            Complex64::from_polar(1.0, -2.0 * PI * m as f64 * df * tau)
        })
    };
    let (spectrum, mut degraded) = pseudospectrum(&cov, n_paths, delay_grid.len(), |i| {
        steer(delay_grid[i], sub)
    });
    if full.len() * 2 * (n_sc - sub + 1) < n_paths + 1 {
        degraded = true;
    }
    let peaks = top_peaks(&spectrum, n_paths);
    let delays: Vec<f64> = peaks.iter().map(|&i| delay_grid[i]).collect();

    // Least-squares amplitudes of the chosen delays over the full band.
    let a = DMatrix::from_fn(n_sc, delays.len(), |m, p| {
        Complex64::from_polar(1.0, -2.0 * PI * m as f64 * df * delays[p])
    });
    let mut powers = vec![0.0; delays.len()];
    if let Ok(pinv) = a.clone().pseudo_inverse(1e-9) {
        for h in &full {
            let amp = &pinv * DVector::from_column_slice(h);
            for (p, v) in powers.iter_mut().zip(amp.iter()) {
                *p += v.norm_sqr();
            }
        }
    }
    let mut order: Vec<usize> = (0..delays.len()).collect();
    order.sort_by(|&x, &y| powers[y].total_cmp(&powers[x]));
    let delays: Vec<f64> = order.iter().map(|&i| delays[i]).collect();
    Ok(MusicRanging {
        ranges: delays.iter().map(|&d| delay_to_range(d)).collect(),
        powers: order.iter().map(|&i| powers[i]).collect(),
        delays,
        degraded,
        pseudospectrum: spectrum,
    })
}

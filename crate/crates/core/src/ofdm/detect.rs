use num_complex::Complex64;

use super::preamble::Preamble;
use super::RadioConfig;
use crate::error::{ensure, Result};
use crate::signal::SampleBuffer;

/// A detected preamble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Sample index of the preamble start.
    pub index: usize,
    /// Peak of the normalised short-training autocorrelation metric, in `[0, 1]`.
    pub metric: f64,
}

/// Finds the first preamble in `rx`.
///
/// A delayed autocorrelation over the periodic short training section gives a
/// level-independent metric; the first crossing of `threshold` starts a search for the
/// long training symbols, which are located by cross-correlation against the known
/// symbol. Returns `None` when nothing crosses the threshold or the packet is truncated.
pub fn detect_preamble(
    rx: &SampleBuffer,
    cfg: &RadioConfig,
    threshold: f64,
) -> Result<Option<Detection>> {
    ensure(threshold > 0.0 && threshold <= 1.0, || {
        format!("threshold must be in (0, 1], got {threshold}")
    })?;
    let pre = Preamble::new(cfg);
    let x = rx.samples();
    let n = cfg.fft_size();
    let p = pre.short_period();
    let w = 8 * p;
    if x.len() < pre.len() {
        return Ok(None);
    }

    // Running sums of r*[d+m] r[d+m+P] and |r[d+m+P]|^2 over m < W.
    let mut corr = Complex64::new(0.0, 0.0);
    let mut energy = 0.0;
    for m in 0..w {
        corr += x[m].conj() * x[m + p];
        energy += x[m + p].norm_sqr();
    }
    let last = x.len() - w - p;
    let mut crossing = None;
    let mut d = 0;
    loop {
        let metric = if energy > 0.0 {
            corr.norm_sqr() / (energy * energy)
        } else {
            0.0
        };
        if metric >= threshold {
            crossing = Some(d);
            break;
        }
        if d == last {
            break;
        }
        corr += x[d + w].conj() * x[d + w + p] - x[d].conj() * x[d + p];
        energy += x[d + w + p].norm_sqr() - x[d + p].norm_sqr();
        d += 1;
    }
    let Some(d0) = crossing else {
        return Ok(None);
    };

    // Track the metric peak over the plateau for the reported value.
    let mut best_metric = 0.0f64;
    let plateau_end = (d0 + 2 * p).min(last);
    for dd in d0..=plateau_end {
        let mut c = Complex64::new(0.0, 0.0);
        let mut e = 0.0;
        for m in 0..w {
            c += x[dd + m].conj() * x[dd + m + p];
            e += x[dd + m + p].norm_sqr();
        }
        if e > 0.0 {
            best_metric = best_metric.max(c.norm_sqr() / (e * e));
        }
    }

    // Fine timing: the first long symbol maximises |c(i)| |c(i+N)|.
    let reference = pre.long_symbol();
    let lo = pre.long_offset();
    let search_start = (d0 + lo).saturating_sub(3 * p);
    let search_end = d0 + lo + 2 * n;
    let xcorr = |i: usize| -> f64 {
        if i + n > x.len() {
            return 0.0;
        }
        reference
            .iter()
            .zip(&x[i..i + n])
            .map(|(r, s)| r.conj() * s)
            .sum::<Complex64>()
            .norm()
    };
    let mut best = None;
    let mut best_score = 0.0;
    for i in search_start..=search_end {
        let score = xcorr(i) * xcorr(i + n);
        if score > best_score {
            best_score = score;
            best = Some(i);
        }
    }
    let Some(first_long) = best else {
        return Ok(None);
    };
    if first_long < lo || first_long - lo + pre.len() > x.len() {
        return Ok(None);
    }
    Ok(Some(Detection {
        index: first_long - lo,
        metric: best_metric.min(1.0),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{generate_noise, rng_from_seed};

    fn embed(cfg: &RadioConfig, offset: usize, total: usize, gain: Complex64) -> Vec<Complex64> {
        let pre = Preamble::new(cfg);
        let mut x = vec![Complex64::new(0.0, 0.0); total];
        for (i, s) in pre.samples().iter().enumerate() {
            x[offset + i] = s * gain;
        }
        x
    }

    #[test]
    fn finds_clean_preamble() {
        let cfg = RadioConfig::default();
        let x = embed(&cfg, 137, 1000, Complex64::new(0.0, 0.01));
        let b = SampleBuffer::new(x, cfg.sample_rate(), 0.0).unwrap();
        let d = detect_preamble(&b, &cfg, 0.8).unwrap().unwrap();
        assert_eq!(d.index, 137);
        assert!(d.metric > 0.99);
    }

    #[test]
    fn finds_preamble_at_10_db() {
        let cfg = RadioConfig::default();
        let mut rng = rng_from_seed(5);
        for trial in 0..20 {
            let offset = 100 + 13 * trial;
            let mut x = embed(&cfg, offset, 1200, Complex64::new(1.0, 0.0));
            let noise = generate_noise(&mut rng, x.len(), 0.1).unwrap();
            for (a, b) in x.iter_mut().zip(noise) {
                *a += b;
            }
            let b = SampleBuffer::new(x, cfg.sample_rate(), 0.0).unwrap();
            let d = detect_preamble(&b, &cfg, 0.5).unwrap().unwrap();
            assert_eq!(d.index, offset);
        }
    }

    #[test]
    fn noise_only_gives_nothing() {
        let cfg = RadioConfig::default();
        let mut rng = rng_from_seed(6);
        let noise = generate_noise(&mut rng, 4000, 1.0).unwrap();
        let b = SampleBuffer::new(noise, cfg.sample_rate(), 0.0).unwrap();
        assert!(detect_preamble(&b, &cfg, 0.5).unwrap().is_none());
        let z = SampleBuffer::zeros(4000, cfg.sample_rate(), 0.0).unwrap();
        assert!(detect_preamble(&z, &cfg, 0.5).unwrap().is_none());
    }
}

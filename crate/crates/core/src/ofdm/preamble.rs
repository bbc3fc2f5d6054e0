use num_complex::Complex64;

use super::{Lfsr, RadioConfig};
use crate::signal::{fft, ifft_in_place, mean_power, SampleBuffer};

/// Time-domain samples of an `N`-point OFDM symbol (no cyclic prefix) carrying `values` on `subcarriers`.
///
/// Scaled so that unit-magnitude values on every subcarrier give unit mean power.
pub(crate) fn ofdm_symbol(
    cfg: &RadioConfig,
    subcarriers: &[i32],
    values: &[Complex64],
) -> Vec<Complex64> {
    let n = cfg.fft_size();
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for (&k, &v) in subcarriers.iter().zip(values) {
        bins[cfg.bin(k)] = v;
    }
    ifft_in_place(&mut bins);
    let scale = n as f64 / (subcarriers.len() as f64).sqrt();
    bins.iter().map(|v| v * scale).collect()
}

/// Legacy-style training preamble: ten short periods of `N/4` samples followed by a
/// double-length guard and two identical long training symbols.
///
/// At the default configuration this is 320 samples (16 us). The whole preamble is
/// normalised to unit mean power.
#[derive(Debug, Clone, PartialEq)]
pub struct Preamble {
    samples: Vec<Complex64>,
    short_period: usize,
    long_offset: usize,
    long_symbol: Vec<Complex64>,
    long_reference: Vec<Complex64>,
}

impl Preamble {
    pub fn new(cfg: &RadioConfig) -> Self {
        let n = cfg.fft_size();
        let mut lfsr = Lfsr::new();
        let short_sc: Vec<i32> = cfg
            .used_subcarriers()
            .iter()
            .copied()
            .filter(|k| k % 4 == 0)
            .collect();
        let short_vals: Vec<Complex64> = short_sc
            .iter()
            .map(|_| Complex64::new(lfsr.next_sign(), lfsr.next_sign()) / 2f64.sqrt())
            .collect();
        let long_vals: Vec<Complex64> = cfg
            .used_subcarriers()
            .iter()
            .map(|_| Complex64::new(lfsr.next_sign(), 0.0))
            .collect();

        let period = n / 4;
        let short = ofdm_symbol(cfg, &short_sc, &short_vals);
        let long = ofdm_symbol(cfg, cfg.used_subcarriers(), &long_vals);
        let mut samples = Vec::with_capacity(5 * n);
        for _ in 0..10 {
            samples.extend_from_slice(&short[..period]);
        }
        samples.extend_from_slice(&long[n / 2..]);
        let long_offset = samples.len();
        samples.extend_from_slice(&long);
        samples.extend_from_slice(&long);

        let g = 1.0 / mean_power(&samples).sqrt();
        for s in samples.iter_mut() {
            *s *= g;
        }
        let long_symbol = samples[long_offset..long_offset + n].to_vec();
        let spec = fft(&long_symbol, n);
        let long_reference = cfg
            .used_subcarriers()
            .iter()
            .map(|&k| spec[cfg.bin(k)])
            .collect();
        Self {
            samples,
            short_period: period,
            long_offset,
            long_symbol,
            long_reference,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Length of one short training period.
    pub fn short_period(&self) -> usize {
        self.short_period
    }

    /// Offset of the first long training symbol from the preamble start.
    pub fn long_offset(&self) -> usize {
        self.long_offset
    }

    /// One long training symbol in the time domain.
    pub fn long_symbol(&self) -> &[Complex64] {
        &self.long_symbol
    }

    /// DFT of the long training symbol on the used subcarriers, in ascending subcarrier order.
    pub fn long_reference(&self) -> &[Complex64] {
        &self.long_reference
    }
}

/// The training preamble as a buffer starting at time zero.
pub fn generate_preamble(cfg: &RadioConfig) -> SampleBuffer {
    SampleBuffer::new(Preamble::new(cfg).samples, cfg.sample_rate(), 0.0)
        .expect("preamble samples are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_length_and_power() {
        let cfg = RadioConfig::default();
        let p = generate_preamble(&cfg);
        assert_eq!(p.len(), 320);
        assert!((p.power() - 1.0).abs() < 1e-12);
        assert!((p.duration() - 16e-6).abs() < 1e-15);
    }

    #[test]
    fn short_section_is_periodic() {
        let cfg = RadioConfig::default();
        let p = Preamble::new(&cfg);
        let s = p.samples();
        for i in 0..(9 * 16) {
            assert!((s[i] - s[i + 16]).norm() < 1e-12);
        }
        let lo = p.long_offset();
        for i in 0..64 {
            assert!((s[lo + i] - s[lo + 64 + i]).norm() < 1e-12);
        }
        // Guard interval is the tail of the long symbol.
        for i in 0..32 {
            assert!((s[lo - 32 + i] - s[lo + 32 + i]).norm() < 1e-12);
        }
    }

    #[test]
    fn long_reference_is_flat() {
        let cfg = RadioConfig::default();
        let p = Preamble::new(&cfg);
        let m0 = p.long_reference()[0].norm();
        for v in p.long_reference() {
            assert!((v.norm() - m0).abs() < 1e-9);
            assert!(v.im.abs() < 1e-9);
        }
    }
}

use crate::error::{ensure, Result};
use crate::SPEED_OF_LIGHT;

/// Carrier, sampling and subcarrier layout of the OFDM radio.
///
/// Defaults follow a 20 MHz 802.11 channel at 2.4 GHz: 64-point FFT, 16-sample cyclic
/// prefix, 52 used subcarriers (DC excluded) and pilots at +-7 and +-21.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    carrier_freq: f64,
    sample_rate: f64,
    fft_size: usize,
    cp_len: usize,
    used: Vec<i32>,
    pilots: Vec<i32>,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self::new(2.4e9, 20e6, 64, 16).expect("default radio configuration is valid")
    }
}

impl RadioConfig {
    /// Builds a configuration with the standard subcarrier layout scaled to `fft_size`.
    ///
    /// Used subcarriers are `+-1 ..= +-(26 fft_size / 64)` and pilots sit at
    /// `+-round(7 fft_size / 64)` and `+-round(21 fft_size / 64)`.
    pub fn new(
        carrier_freq: f64,
        sample_rate: f64,
        fft_size: usize,
        cp_len: usize,
    ) -> Result<Self> {
        ensure(carrier_freq.is_finite() && carrier_freq > 0.0, || {
            format!("carrier frequency must be positive, got {carrier_freq}")
        })?;
        ensure(sample_rate.is_finite() && sample_rate > 0.0, || {
            format!("sample rate must be positive, got {sample_rate}")
        })?;
        ensure(fft_size >= 16 && fft_size % 4 == 0, || {
            format!("FFT size must be a multiple of 4 and at least 16, got {fft_size}")
        })?;
        ensure(cp_len < fft_size, || {
            "cyclic prefix must be shorter than the FFT".to_string()
        })?;
        let half = (26 * fft_size / 64) as i32;
        let used: Vec<i32> = (-half..=half).filter(|&k| k != 0).collect();
        let p1 = ((7 * fft_size) as f64 / 64.0).round() as i32;
        let p2 = ((21 * fft_size) as f64 / 64.0).round() as i32;
        let mut pilots = vec![-p2, -p1, p1, p2];
        pilots.dedup();
        Ok(Self {
            carrier_freq,
            sample_rate,
            fft_size,
            cp_len,
            used,
            pilots,
        })
    }

    /// Replaces the used-subcarrier set. Indices must be distinct, non-zero and inside the band.
    pub fn with_used_subcarriers(mut self, mut used: Vec<i32>) -> Result<Self> {
        used.sort_unstable();
        used.dedup();
        let lim = (self.fft_size / 2) as i32;
        ensure(
            !used.is_empty() && used.iter().all(|&k| k != 0 && k > -lim && k < lim),
            || "used subcarriers must be non-zero and within the FFT band".to_string(),
        )?;
        self.pilots.retain(|p| used.contains(p));
        self.used = used;
        Ok(self)
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    /// OFDM symbol duration in seconds.
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_len() as f64 / self.sample_rate
    }

    /// Subcarrier spacing `fs / N` in Hz.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.sample_rate / self.fft_size as f64
    }

    /// Carrier wavelength in metres.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Used subcarrier indices in ascending order.
    pub fn used_subcarriers(&self) -> &[i32] {
        &self.used
    }

    pub fn pilot_subcarriers(&self) -> &[i32] {
        &self.pilots
    }

    /// Used subcarriers that carry data (pilots removed).
    pub fn data_subcarriers(&self) -> Vec<i32> {
        self.used
            .iter()
            .copied()
            .filter(|k| !self.pilots.contains(k))
            .collect()
    }

    /// FFT bin holding subcarrier `k`.
    pub fn bin(&self, k: i32) -> usize {
        k.rem_euclid(self.fft_size as i32) as usize
    }

    /// Absolute RF frequency of subcarrier `k`.
    pub fn subcarrier_freq(&self, k: i32) -> f64 {
        self.carrier_freq + k as f64 * self.subcarrier_spacing()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let c = RadioConfig::default();
        assert_eq!(c.used_subcarriers().len(), 52);
        assert_eq!(c.pilot_subcarriers(), &[-21, -7, 7, 21]);
        assert_eq!(c.data_subcarriers().len(), 48);
        assert_eq!(c.subcarrier_spacing(), 312_500.0);
        assert!((c.wavelength() - 0.1249).abs() < 1e-3);
        assert!(!c.used_subcarriers().contains(&0));
    }

    #[test]
    fn spacing_follows_fft_size() {
        let c = RadioConfig::new(2.4e9, 20e6, 128, 32).unwrap();
        assert_eq!(c.subcarrier_spacing(), 156_250.0);
        assert_eq!(c.used_subcarriers().len(), 104);
    }

    #[test]
    fn rejects_invalid() {
        assert!(RadioConfig::new(0.0, 20e6, 64, 16).is_err());
        assert!(RadioConfig::new(2.4e9, 20e6, 62, 16).is_err());
        assert!(RadioConfig::new(2.4e9, 20e6, 64, 64).is_err());
        assert!(RadioConfig::default()
            .with_used_subcarriers(vec![0, 1])
            .is_err());
    }
}

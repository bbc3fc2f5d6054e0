use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::{fir_filter, Port};
use crate::error::{ensure, Result};
use crate::signal::{db_to_lin, dbm_to_watts, mean_power, ComplexGaussian};

/// First-stage isolator hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeparatorKind {
    #[default]
    Circulator,
    HybridCoupler,
}

/// Knobs of the leakage model and the cancellers.
///
/// The defaults put the three stages near 12, 40 and 25 dB of suppression for a 5 dBm
/// transmitter with a -90 dBm noise floor: the secondary leakage taps (which one analog
/// tap cannot follow) sit 40 dB below the main tap, and transmitter distortion that only
/// the analog path sees is 25 dB below the signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CancellationConfig {
    pub tx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    /// Leakage power relative to the transmit power before first-stage isolation, dB.
    pub coupling_db: f64,
    pub separator: SeparatorKind,
    pub isolation_db: f64,
    /// Energy of the delayed leakage taps relative to the main tap, dB.
    pub analog_mismatch_db: f64,
    /// Number of leakage taps (main plus delayed).
    pub leakage_taps: usize,
    /// Transmit distortion power relative to the signal, dB. Present in the RF reference, absent from baseband.
    pub tx_evm_db: f64,
    pub digital_taps: usize,
    pub lms_mu: f64,
    /// Preamble repetitions used for one calibration.
    pub calibration_passes: usize,
    /// Leakage energy that only exists with the antenna connected, relative to the main tap, dB.
    pub antenna_contribution_db: f64,
    /// Relative change of each leakage tap over one stability horizon.
    pub drift_rel: f64,
    pub stability_horizon_s: f64,
    pub recalibration_interval_s: f64,
}

impl Default for CancellationConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 5.0,
            noise_floor_dbm: -90.0,
            coupling_db: -20.0,
            separator: SeparatorKind::Circulator,
            isolation_db: 12.0,
            analog_mismatch_db: -40.0,
            leakage_taps: 4,
            tx_evm_db: -25.0,
            digital_taps: 16,
            lms_mu: 0.1,
            calibration_passes: 20,
            antenna_contribution_db: -80.0,
            drift_rel: 2e-4,
            stability_horizon_s: 600.0,
            recalibration_interval_s: 60.0,
        }
    }
}

impl CancellationConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.leakage_taps >= 1, || {
            "need at least one leakage tap".to_string()
        })?;
        ensure(self.digital_taps >= self.leakage_taps, || {
            format!(
                "digital canceller needs at least as many taps ({}) as the leakage channel ({})",
                self.digital_taps, self.leakage_taps
            )
        })?;
        ensure(self.lms_mu > 0.0 && self.lms_mu < 2.0, || {
            "LMS step must lie in (0, 2)".to_string()
        })?;
        ensure(self.calibration_passes >= 1, || {
            "need at least one calibration pass".to_string()
        })?;
        ensure(self.isolation_db >= 0.0, || {
            "isolation must be non-negative".to_string()
        })?;
        ensure(self.stability_horizon_s > 0.0, || {
            "stability horizon must be positive".to_string()
        })
    }

    /// Leakage power reaching the analog stage, dBm.
    pub fn post_isolation_leakage_dbm(&self) -> f64 {
        self.tx_power_dbm + self.coupling_db - self.isolation_db
    }
}

/// Hardware coupling from the transmitter into the receiver behind the first stage.
///
/// Taps act on the transmitted RF signal in sqrt(W). A slow deterministic drift moves
/// each tap by `drift_rel` of its size per stability horizon, and an extra small
/// contribution appears only while the antenna (rather than the dummy load) is connected.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageChannel {
    pub taps: Vec<Complex64>,
    pub antenna_taps: Vec<Complex64>,
    pub drift_directions: Vec<Complex64>,
    pub drift_rel: f64,
    pub horizon_s: f64,
}

impl LeakageChannel {
    /// A static channel with the given taps.
    pub fn fixed(taps: Vec<Complex64>) -> Self {
        let n = taps.len();
        Self {
            taps,
            antenna_taps: vec![Complex64::new(0.0, 0.0); n],
            drift_directions: vec![Complex64::new(0.0, 0.0); n],
            drift_rel: 0.0,
            horizon_s: 600.0,
        }
    }

    /// Draws tap phases for the configured leakage budget.
    pub fn generate<R: Rng + ?Sized>(cfg: &CancellationConfig, rng: &mut R) -> Self {
        let main = (db_to_lin(cfg.coupling_db - cfg.isolation_db)).sqrt();
        let extra = cfg.leakage_taps - 1;
        let phase = |rng: &mut R| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        let mut taps = vec![main * phase(rng)];
        // Delayed taps share the mismatch energy with geometrically decaying weights.
        let weights: Vec<f64> = (0..extra).map(|i| 0.5f64.powi(i as i32)).collect();
        let wsum: f64 = weights.iter().sum();
        for w in &weights {
            let e = main * main * db_to_lin(cfg.analog_mismatch_db) * w / wsum;
            taps.push(e.sqrt() * phase(rng));
        }
        let antenna_scale = db_to_lin(cfg.antenna_contribution_db).sqrt();
        let antenna_taps = taps
            .iter()
            .map(|t| t * antenna_scale * phase(rng))
            .collect();
        let drift_directions = taps.iter().map(|_| phase(rng)).collect();
        Self {
            taps,
            antenna_taps,
            drift_directions,
            drift_rel: cfg.drift_rel,
            horizon_s: cfg.stability_horizon_s,
        }
    }

    /// Effective taps at time `t` with the Tx port on `port`.
    pub fn taps_at(&self, t: f64, port: Port) -> Vec<Complex64> {
        let drift = self.drift_rel * t / self.horizon_s;
        self.taps
            .iter()
            .zip(&self.drift_directions)
            .zip(&self.antenna_taps)
            .map(|((&g, &u), &a)| {
                let base = g * (Complex64::new(1.0, 0.0) + u * drift);
                if port == Port::Antenna {
                    base + a
                } else {
                    base
                }
            })
            .collect()
    }

    /// Leakage seen behind the first stage for transmitted RF samples `x`.
    pub fn leak(&self, x: &[Complex64], t: f64, port: Port) -> Vec<Complex64> {
        fir_filter(&self.taps_at(t, port), x)
    }

    /// Normalised correlation between the channel responses at two instants.
    pub fn correlation(&self, t1: f64, t2: f64, port: Port) -> f64 {
        let a = self.taps_at(t1, port);
        let b = self.taps_at(t2, port);
        let dot: Complex64 = a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum();
        let na: f64 = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            return 1.0;
        }
        dot.norm() / (na * nb)
    }

    /// Fraction of leakage energy that exists only with the antenna connected.
    pub fn antenna_fraction(&self) -> f64 {
        let a: f64 = self.antenna_taps.iter().map(|v| v.norm_sqr()).sum();
        let t: f64 = self.taps.iter().map(|v| v.norm_sqr()).sum();
        if t == 0.0 {
            0.0
        } else {
            a / t
        }
    }
}

/// What a transmission looks like to the separator.
#[derive(Debug, Clone, PartialEq)]
pub struct TxReference {
    /// Digital baseband samples, unit mean power.
    pub baseband: Vec<Complex64>,
    /// RF samples as radiated, in sqrt(W), including transmitter distortion.
    pub rf: Vec<Complex64>,
    /// Length of the preamble at the start of `baseband`.
    pub preamble_len: usize,
}

/// Turns baseband into the RF signal: scaling to the transmit power plus additive distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmitter {
    pub power_w: f64,
    pub evm_db: f64,
}

impl Transmitter {
    pub fn from_config(cfg: &CancellationConfig) -> Self {
        Self {
            power_w: dbm_to_watts(cfg.tx_power_dbm),
            evm_db: cfg.tx_evm_db,
        }
    }

    pub fn emit<R: Rng + ?Sized>(
        &self,
        baseband: &[Complex64],
        preamble_len: usize,
        rng: &mut R,
    ) -> Result<TxReference> {
        let p = mean_power(baseband);
        let dist = ComplexGaussian::from_power(p * db_to_lin(self.evm_db))?;
        let a = self.power_w.sqrt();
        let rf = baseband
            .iter()
            .map(|&s| (s + dist.sample(rng)) * a)
            .collect();
        Ok(TxReference {
            baseband: baseband.to_vec(),
            rf,
            preamble_len,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::rng_from_seed;

    #[test]
    fn generated_budget() {
        let cfg = CancellationConfig::default();
        let ch = LeakageChannel::generate(&cfg, &mut rng_from_seed(1));
        assert_eq!(ch.taps.len(), 4);
        let main = 10.0 * ch.taps[0].norm_sqr().log10();
        assert!((main - (-32.0)).abs() < 1e-9);
        let rest: f64 = ch.taps[1..].iter().map(|t| t.norm_sqr()).sum();
        assert!((10.0 * (rest / ch.taps[0].norm_sqr()).log10() + 40.0).abs() < 1e-9);
        assert!(ch.antenna_fraction() <= 0.1);
        assert!(ch.correlation(0.0, 600.0, Port::Antenna) >= 0.9);
    }

    #[test]
    fn config_validation() {
        let mut c = CancellationConfig::default();
        assert!(c.validate().is_ok());
        c.digital_taps = 2;
        assert!(c.validate().is_err());
    }
}

//! Experiment configuration: one TOML file with flat dotted keys, every key optional.
//!
//! ```toml
//! seed = 7
//! radio.fft_size = 64
//! ranging.trials = 100
//! ```
//!
//! `isac-bench validate` prints the normalized form with every default filled in.

use std::path::Path;

use isac_core::cancellation::CancellationConfig;
use isac_core::estimation::{FeatureGrid, SparseOptions};
use isac_core::ofdm::RadioConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_freq_hz: f64,
    pub sample_rate_hz: f64,
    pub fft_size: usize,
    pub cp_len: usize,
}

impl Default for RadioSection {
    fn default() -> Self {
        let r = RadioConfig::default();
        Self {
            carrier_freq_hz: r.carrier_freq(),
            sample_rate_hz: r.sample_rate(),
            fft_size: r.fft_size(),
            cp_len: r.cp_len(),
        }
    }
}

/// Sparse estimator settings shared by the ranging, velocity and localization runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSection {
    pub lambda_frac: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EstimationSection {
    fn default() -> Self {
        let s = SparseOptions::default();
        Self {
            lambda_frac: s.lambda_frac,
            max_iter: s.max_iter,
            tol: s.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub symbols: usize,
    pub ppm: f64,
    pub packets: usize,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            symbols: 100,
            ppm: 20.0,
            packets: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    /// Transmitter-receiver separation of the bistatic link, m.
    pub los_distance_m: f64,
    pub rcs_m2: f64,
    pub max_range_m: f64,
    /// Target displacement used for the motion projection maps, m.
    pub displacement_m: f64,
    pub grid_step_m: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            los_distance_m: 3.0,
            rcs_m2: 1.0,
            max_range_m: 10.0,
            displacement_m: 0.01,
            grid_step_m: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacSection {
    pub duration_s: f64,
    pub m_timer_s: f64,
    pub distance_m: f64,
    pub tx_power_dbm: f64,
    /// State-machine events in the long invariant run.
    pub invariant_events: usize,
}

impl Default for MacSection {
    fn default() -> Self {
        Self {
            duration_s: 30.0,
            m_timer_s: 1e-3,
            distance_m: 12.0,
            tx_power_dbm: 20.0,
            invariant_events: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftSection {
    pub duration_s: f64,
    pub rate_hz: f64,
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub window: usize,
    pub hop: usize,
    pub snr_db: f64,
    /// Traffic model of the irregular run.
    pub schedule: String,
}

impl Default for StftSection {
    fn default() -> Self {
        Self {
            duration_s: 8.0,
            rate_hz: 100.0,
            f_lo_hz: 9.0,
            f_hi_hz: 15.0,
            window: 64,
            hop: 16,
            snr_db: 15.0,
            schedule: "gaming".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CancellationSection {
    pub tx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    pub coupling_db: f64,
    pub isolation_db: f64,
    pub analog_mismatch_db: f64,
    pub tx_evm_db: f64,
    pub digital_taps: usize,
    pub lms_mu: f64,
    pub calibration_passes: usize,
    pub scenes: usize,
}

impl Default for CancellationSection {
    fn default() -> Self {
        let c = CancellationConfig::default();
        Self {
            tx_power_dbm: c.tx_power_dbm,
            noise_floor_dbm: c.noise_floor_dbm,
            coupling_db: c.coupling_db,
            isolation_db: c.isolation_db,
            analog_mismatch_db: c.analog_mismatch_db,
            tx_evm_db: c.tx_evm_db,
            digital_taps: c.digital_taps,
            lms_mu: c.lms_mu,
            calibration_passes: c.calibration_passes,
            scenes: 100,
        }
    }
}

/// Monte-Carlo sweep settings shared by the ranging, velocity and localization runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub trials: usize,
    pub packets: usize,
    pub snr_db: f64,
    /// Traffic model driving packet times: "streaming", "gaming" or "regular".
    pub schedule: String,
    /// Range of the swept quantity (target range in m, or speed in m/s).
    pub min_value: f64,
    pub max_value: f64,
    pub delay_max_ns: f64,
    pub delay_step_ns: f64,
    pub doppler_max_hz: f64,
    pub doppler_step_hz: f64,
}

impl SweepSection {
    pub fn grid(&self) -> Result<FeatureGrid, ConfigError> {
        FeatureGrid::new(
            self.delay_max_ns * 1e-9,
            self.delay_step_ns * 1e-9,
            self.doppler_max_hz,
            self.doppler_step_hz,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

// Same keys, different defaults per experiment.
macro_rules! sweep_section {
    ($name:ident, $trials:expr, $packets:expr, $min:expr, $max:expr, $dmax:expr, $dstep:expr, $fmax:expr, $fstep:expr) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            pub trials: usize,
            pub packets: usize,
            pub snr_db: f64,
            pub schedule: String,
            pub min_value: f64,
            pub max_value: f64,
            pub delay_max_ns: f64,
            pub delay_step_ns: f64,
            pub doppler_max_hz: f64,
            pub doppler_step_hz: f64,
        }

        impl Default for $name {
            fn default() -> Self {
                Self {
                    trials: $trials,
                    packets: $packets,
                    snr_db: 15.0,
                    schedule: "streaming".into(),
                    min_value: $min,
                    max_value: $max,
                    delay_max_ns: $dmax,
                    delay_step_ns: $dstep,
                    doppler_max_hz: $fmax,
                    doppler_step_hz: $fstep,
                }
            }
        }

        impl $name {
            pub fn sweep(&self) -> SweepSection {
                SweepSection {
                    trials: self.trials,
                    packets: self.packets,
                    snr_db: self.snr_db,
                    schedule: self.schedule.clone(),
                    min_value: self.min_value,
                    max_value: self.max_value,
                    delay_max_ns: self.delay_max_ns,
                    delay_step_ns: self.delay_step_ns,
                    doppler_max_hz: self.doppler_max_hz,
                    doppler_step_hz: self.doppler_step_hz,
                }
            }
        }
    };
}

sweep_section!(RangingSection, 100, 32, 1.0, 15.0, 300.0, 5.0, 20.0, 1.0);
sweep_section!(VelocitySection, 100, 64, 0.6, 3.5, 150.0, 25.0, 60.0, 0.25);
sweep_section!(
    LocalizationSection,
    100,
    32,
    1.0,
    10.0,
    150.0,
    5.0,
    20.0,
    1.0
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSection {
    pub sigma_range_m: f64,
    pub sigma_aoa_deg: f64,
    pub cell_m: f64,
    pub scene_m: f64,
}

impl Default for FusionSection {
    fn default() -> Self {
        Self {
            sigma_range_m: 0.5,
            sigma_aoa_deg: 5.0,
            cell_m: 0.25,
            scene_m: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Seed used when the command line does not give one.
    pub seed: u64,
    /// Worker threads for Monte-Carlo trials; 0 uses one per core.
    pub workers: usize,
    pub radio: RadioSection,
    pub estimation: EstimationSection,
    pub phase: PhaseSection,
    pub geometry: GeometrySection,
    pub mac: MacSection,
    pub stft: StftSection,
    pub cancellation: CancellationSection,
    pub ranging: RangingSection,
    pub velocity: VelocitySection,
    pub localization: LocalizationSection,
    pub fusion: FusionSection,
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: BenchConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> Result<(), ConfigError> {
        self.radio_config()?;
        self.cancellation_config()?;
        for (name, s) in [
            ("ranging", self.ranging.sweep()),
            ("velocity", self.velocity.sweep()),
            ("localization", self.localization.sweep()),
        ] {
            s.grid()?;
            if s.trials == 0 || s.packets < 8 {
                return Err(ConfigError::Invalid(format!(
                    "{name}: need trials >= 1 and packets >= 8"
                )));
            }
            if !["streaming", "gaming", "regular"].contains(&s.schedule.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "{name}.schedule: unknown model {:?}",
                    s.schedule
                )));
            }
        }
        if !["streaming", "gaming"].contains(&self.stft.schedule.as_str()) {
            return Err(ConfigError::Invalid(format!(
                "stft.schedule: expected \"streaming\" or \"gaming\", got {:?}",
                self.stft.schedule
            )));
        }
        if self.stft.window < 2 || self.stft.hop == 0 || self.stft.f_hi_hz <= self.stft.f_lo_hz {
            return Err(ConfigError::Invalid(
                "stft: need window >= 2, hop >= 1 and f_hi_hz > f_lo_hz".into(),
            ));
        }
        Ok(())
    }

    pub fn radio_config(&self) -> Result<RadioConfig, ConfigError> {
        let r = &self.radio;
        RadioConfig::new(r.carrier_freq_hz, r.sample_rate_hz, r.fft_size, r.cp_len)
            .map_err(|e| ConfigError::Invalid(format!("radio: {e}")))
    }

    pub fn cancellation_config(&self) -> Result<CancellationConfig, ConfigError> {
        let c = &self.cancellation;
        let cfg = CancellationConfig {
            tx_power_dbm: c.tx_power_dbm,
            noise_floor_dbm: c.noise_floor_dbm,
            coupling_db: c.coupling_db,
            isolation_db: c.isolation_db,
            analog_mismatch_db: c.analog_mismatch_db,
            tx_evm_db: c.tx_evm_db,
            digital_taps: c.digital_taps,
            lms_mu: c.lms_mu,
            calibration_passes: c.calibration_passes,
            ..CancellationConfig::default()
        };
        cfg.validate()
            .map_err(|e| ConfigError::Invalid(format!("cancellation: {e}")))?;
        Ok(cfg)
    }

    pub fn sparse_options(&self) -> SparseOptions {
        SparseOptions {
            lambda_frac: self.estimation.lambda_frac,
            max_iter: self.estimation.max_iter,
            tol: self.estimation.tol,
            ..SparseOptions::default()
        }
    }

    /// Every key with its value, one `key = value` line each, sorted.
    pub fn normalized(&self) -> String {
        let table = toml::Table::try_from(self).expect("configuration serializes");
        let mut lines = Vec::new();
        flatten("", &toml::Value::Table(table), &mut lines);
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// First 16 hex digits of the SHA-256 of [`BenchConfig::normalized`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.normalized().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => out.push(format!("{prefix} = {other}")),
    }
}

//! Simulation and signal processing for monostatic and bistatic Wi-Fi sensing.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`]: sample buffers, FFT helpers, nonuniform transforms, STFT, noise.
//! * [`ofdm`]: a parameterised 802.11-style PHY with preamble detection and CSI extraction.
//! * [`channel`]: propagation geometry, radar path gains, hardware offsets and the multipath simulator.
//! * [`cancellation`]: the three-stage self-interference separator and its calibration.
//! * [`estimation`]: ADMM-based sparse delay/Doppler estimation and classical baselines.
//! * [`mac`]: the sensing-aware MAC state machine, traffic models and an event-driven simulator.
//! * [`fusion`]: message passing between devices and maximum-likelihood position fusion.

pub mod cancellation;
pub mod channel;
mod error;
pub mod estimation;
pub mod fusion;
pub mod mac;
pub mod ofdm;
pub mod signal;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use num_complex::Complex64;

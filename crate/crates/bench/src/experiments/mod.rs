//! The named experiments. Each returns CSV tables and acceptance checks.

mod cancellation;
mod common;
mod geometry;
mod mac;
mod phase;
mod ranging;
mod sensing;
mod stft;

pub use common::{monostatic_csi, schedule, walking_person, Reflector};

use crate::config::BenchConfig;
use crate::output::Report;

/// Experiment names with the evaluation each reproduces.
pub const EXPERIMENTS: &[(&str, &str)] = &[
    (
        "phase-offsets",
        "CSI phase under clock offsets, bistatic link against monostatic",
    ),
    (
        "los-dominance",
        "reflection-to-direct power ratio of a bistatic link",
    ),
    (
        "motion-ambiguity",
        "path-length sensitivity to radial motion, bistatic against monostatic",
    ),
    (
        "separator-harm",
        "reception SNR with the separator forced on",
    ),
    (
        "comms-impact",
        "communication statistics with sensing on and off, MAC state invariants",
    ),
    (
        "stft-irregular",
        "Doppler spectrograms under regular and irregular packets",
    ),
    (
        "cancellation-budget",
        "per-stage leakage suppression and reflection preservation",
    ),
    (
        "ranging",
        "ranging error of sparse, MUSIC and IFFT estimators over irregular packets",
    ),
    (
        "velocity",
        "radial velocity error of sparse and FFT estimators over irregular packets",
    ),
    (
        "localization",
        "single-device and fused two-device localization error",
    ),
];

/// Runs the named experiment, or returns `None` for an unknown name.
pub fn run(name: &str, cfg: &BenchConfig, seed: u64) -> Option<anyhow::Result<Report>> {
    Some(match name {
        "phase-offsets" => phase::run(cfg, seed),
        "los-dominance" => geometry::run_los(cfg, seed),
        "motion-ambiguity" => geometry::run_motion(cfg, seed),
        "separator-harm" => mac::run_separator_harm(cfg, seed),
        "comms-impact" => mac::run_comms_impact(cfg, seed),
        "stft-irregular" => stft::run(cfg, seed),
        "cancellation-budget" => cancellation::run(cfg, seed),
        "ranging" => ranging::run(cfg, seed),
        "velocity" => sensing::run_velocity(cfg, seed),
        "localization" => sensing::run_localization(cfg, seed),
        _ => return None,
    })
}

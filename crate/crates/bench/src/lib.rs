//! Experiment harness: configuration, the named experiments and their CSV output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;

pub use config::{BenchConfig, ConfigError};
pub use output::{Check, Report, Table};

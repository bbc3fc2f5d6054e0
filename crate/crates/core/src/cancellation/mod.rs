//! Transmit/receive separation for monostatic sensing: first-stage isolation, a one-tap
//! analog canceller, a preamble-trained FIR digital canceller and the dummy-load
//! calibration that fits both without touching reflections.

mod budget;
mod leakage;
mod lms;
mod regression;
mod separator;

pub use budget::{measure_budget, preservation_trial, BudgetReport, PreservationReport};
pub use leakage::{CancellationConfig, LeakageChannel, SeparatorKind, Transmitter, TxReference};
pub use lms::{fir_filter, Nlms};
pub use regression::{fit_line, params_for_power, LinearFit};
pub use separator::{
    analog_cancel, calibrate, calibration_protocol, digital_cancel, first_stage, fit_cancellers,
    separator_pipeline, write_calibration_log, CalibrationEntry, CancellatorState, Port,
    SeparatorOutput,
};

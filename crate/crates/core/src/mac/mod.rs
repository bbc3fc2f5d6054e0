//! The C/M/B state machine, traffic generation and an event-driven CSMA/CA simulator.

mod sim;
mod state;
mod traffic;

pub use sim::{
    mcs_midpoint_db, run_scenario, success_probability, write_comms_csv, CaptureKind,
    CaptureRecord, CommsStats, DeviceConfig, EventLog, LogEntry, MacConfig, ScenarioResult,
};
pub use state::{step, FrameKind, MacAction, MacEvent, MacState, StateConfig};
pub use traffic::{gap_cv, generate_traffic, GamingParams, StreamingParams, TrafficModel};

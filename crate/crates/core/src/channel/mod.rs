//! Propagation geometry, radar-equation path gains, hardware clock offsets and the
//! multipath simulator that turns a transmitted buffer into per-antenna receptions.

mod geometry;
mod impairment;
mod propagate;
mod scenario;
mod trajectory;

pub use geometry::{
    bistatic_projection, los_gain, path_gain, power_ratio, AntennaArray, AntennaGains, Point3,
};
pub use impairment::{impaired_packet, DriftModel, ImpairmentProfile};
pub use propagate::{
    propagate, propagate_components, PathAmplitude, PathKind, PropagationPath, RxComponents,
    ScenarioGeometry,
};
pub use scenario::{load_scenario, parse_scenario, Scenario};
pub use trajectory::Trajectory;

//! Estimate sharing between devices and maximum-likelihood position fusion.

mod bus;
mod ml;

pub use bus::{Delivery, MessageBus, Payload, SensingMessage};
pub use ml::{fuse_ml, log_likelihood, FusionResult, GridSpec, LikelihoodGrid, NoiseModel};

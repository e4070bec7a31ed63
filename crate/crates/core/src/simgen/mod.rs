//! Synthetic dataset generation: a styled driver population driving a
//! signalized grid under Krauss car-following dynamics.

mod krauss;
mod network;
mod proxy;
mod sim;
mod style;

use thiserror::Error;

pub use krauss::{
    apply_imperfection, desired_speed, krauss_safe_speed, krauss_step, Leader, Route,
    VehicleState, EMERGENCY_DECEL_FACTOR,
};
pub use network::{Axis, Edge, GridSpec, Light, Node, RoadNetwork, Signal};
pub use proxy::{detect_light_violation_proxy, PROXY_SIGNAL_RANGE_M};
pub use sim::{assign_routes, run_simulation, SimConfig, SimOutput};
pub use style::{
    sample_driver_population, standard_style, designed_styles, DriverProfile, DriverStyle, Gauss,
    NoiseSpec, RouteEndpoints,
};

/// Simulation step, seconds.
pub const DT: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("style proportions sum to {sum}, expected 1")]
    ProportionsDontSum { sum: f64 },
    #[error("style {index}: {reason}")]
    StyleInvalid { index: usize, reason: String },
}

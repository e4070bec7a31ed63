//! Driving safety credit scoring from vehicle trajectories.
//!
//! The crate is organised as a pipeline:
//!
//! - [`simgen`] generates a synthetic driver population and runs a Krauss
//!   car-following microsimulation on a signalized grid, emitting 1 Hz
//!   trajectories and ground-truth violation records.
//! - [`featx`] turns trips and violation records into the 23 per-driver
//!   behavior features and assigns good/bad labels.
//! - [`learn`] trains a random forest (plus logistic regression, single tree
//!   and Gaussian naive Bayes baselines), runs stratified cross-validation and
//!   exposes Gini feature importances.
//! - [`scorecard`] turns importances into a 0-100 credit scorecard and builds
//!   rank-band reports.
//!
//! [`types`], [`geo`] and [`trip`] hold the shared domain types and
//! primitives; [`io`] reads and writes the tabular file formats.

// `!(x > 0.0)` is the idiom here for rejecting NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod featx;
pub mod geo;
pub mod io;
pub mod learn;
pub mod scorecard;
pub mod seed;
pub mod simgen;
pub mod trip;
pub mod types;

pub use types::{
    DayRange, DriverId, PeriodSplit, TrajectoryPoint, Trip, ViolationKind, ViolationRecord,
};

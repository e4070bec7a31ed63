//! Trip segmentation and validation.

use thiserror::Error;

use crate::types::{DriverId, TrajectoryPoint, Trip};

/// Idle gap that starts a new trip, seconds.
pub const DEFAULT_TRIP_GAP_S: f64 = 300.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("point {index}: timestamp does not increase")]
    NonMonotonicTime { index: usize },
    #[error("point {index}: negative speed")]
    NegativeSpeed { index: usize },
    #[error("point {index}: coordinate or heading out of range")]
    OutOfRangeCoordinate { index: usize },
    #[error("point {index}: driver or trip identifier differs from the first point")]
    MixedIdentity { index: usize },
}

/// Split one driver's time-ordered stream wherever consecutive points are
/// more than `max_gap` seconds apart. `days` gives the scenario day of each
/// point; a trip takes the day of its first point.
pub fn split_trips(points: &[TrajectoryPoint], days: &[u32], max_gap: f64) -> Vec<Trip> {
    debug_assert_eq!(points.len(), days.len());
    let mut trips: Vec<Trip> = Vec::new();
    let mut start = 0;
    for i in 1..=points.len() {
        let boundary = i == points.len() || points[i].t - points[i - 1].t > max_gap;
        if boundary {
            let id = trips.len() as u32;
            let pts = points[start..i]
                .iter()
                .map(|p| TrajectoryPoint { trip: id, ..*p })
                .collect();
            trips.push(Trip {
                driver: points[start].driver,
                id,
                day: days[start],
                points: pts,
            });
            start = i;
        }
    }
    trips
}

pub fn validate_trajectory(trip: Trip) -> Result<Trip, TrajectoryError> {
    let first: Option<(DriverId, u32)> = trip.points.first().map(|p| (p.driver, p.trip));
    for (index, p) in trip.points.iter().enumerate() {
        if index > 0 && !(p.t > trip.points[index - 1].t) {
            return Err(TrajectoryError::NonMonotonicTime { index });
        }
        if !(p.v >= 0.0) {
            return Err(TrajectoryError::NegativeSpeed { index });
        }
        let coords_ok = (-90.0..=90.0).contains(&p.lat)
            && (-180.0..=180.0).contains(&p.lng)
            && (0.0..360.0).contains(&p.heading);
        if !coords_ok {
            return Err(TrajectoryError::OutOfRangeCoordinate { index });
        }
        if Some((p.driver, p.trip)) != first {
            return Err(TrajectoryError::MixedIdentity { index });
        }
    }
    Ok(trip)
}

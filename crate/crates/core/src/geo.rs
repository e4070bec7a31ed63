//! Geodesic and angular primitives.

use crate::types::TrajectoryPoint;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle distance between two (lat, lng) pairs in degrees.
pub fn haversine_deg(lat1: f64, lng1: f64, lat2: f64, lng2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lng2 - lng1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

pub fn haversine_distance(a: &TrajectoryPoint, b: &TrajectoryPoint) -> f64 {
    haversine_deg(a.lat, a.lng, b.lat, b.lng)
}

/// Sum of consecutive haversine distances.
pub fn path_length(points: &[TrajectoryPoint]) -> f64 {
    points.windows(2).map(|w| haversine_distance(&w[0], &w[1])).sum()
}

/// Minimal separation between two headings on the circle, in [0, 180].
pub fn heading_delta(h1: f64, h2: f64) -> f64 {
    let d = (h1 - h2).abs() % 360.0;
    d.min(360.0 - d)
}

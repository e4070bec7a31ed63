use super::FeatureError;
use crate::types::Trip;

/// `(k, a_k)` for every consecutive pair, with `a_k` the speed change over
/// the time change between points `k-1` and `k`.
pub fn acceleration_series(trip: &Trip) -> Result<Vec<(usize, f64)>, FeatureError> {
    if trip.points.len() < 2 {
        return Err(FeatureError::TooShort(trip.points.len()));
    }
    Ok(trip
        .points
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, (w[1].v - w[0].v) / (w[1].t - w[0].t)))
        .collect())
}

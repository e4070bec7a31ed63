use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    accumulate_event_features, detect_abrupt_events, extract_habit_features, label_driver,
    EventKind, EventThresholds, FeatureError, FeatureVector, Label,
};
use crate::io::PointRow;
use crate::simgen::{detect_light_violation_proxy, RoadNetwork};
use crate::trip::{split_trips, validate_trajectory, DEFAULT_TRIP_GAP_S};
use crate::types::{DriverId, PeriodSplit, Trip, ViolationKind, ViolationRecord};

/// Where the speeding count comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedingSource {
    /// Detected speeding runs in the trajectory.
    #[default]
    Trajectory,
    /// Speeding violation records; distance and time still come from detection.
    Records,
}

/// Where the red-light count comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TlnSource {
    #[default]
    Records,
    /// Hard deceleration near a signal, needs a road network.
    Proxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub thresholds: EventThresholds,
    pub speeding: SpeedingSource,
    pub tln: TlnSource,
    /// Deceleration near a signal that the proxy detector flags, m/s².
    pub proxy_decel: f64,
    /// Time gap that splits a driver's stream into trips, s.
    pub trip_gap: f64,
    /// Violation records needed in the performance period for a bad label.
    pub min_bad_count: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            thresholds: EventThresholds::default(),
            speeding: SpeedingSource::Trajectory,
            tln: TlnSource::Records,
            proxy_decel: 4.5,
            trip_gap: DEFAULT_TRIP_GAP_S,
            min_bad_count: 1,
        }
    }
}

impl ExtractOptions {
    pub fn validate(&self) -> Result<(), String> {
        self.thresholds.validate()?;
        if !(self.proxy_decel > 0.0) || !(self.trip_gap > 0.0) {
            return Err("proxy deceleration and trip gap must be positive".into());
        }
        if self.min_bad_count == 0 {
            return Err("a bad label needs at least one violation".into());
        }
        Ok(())
    }
}

/// The full feature vector of one driver from observation-period trips and
/// that driver's violation records.
pub fn build_feature_vector(
    trips: &[Trip],
    violations: &[ViolationRecord],
    split: &PeriodSplit,
    opts: &ExtractOptions,
    network: Option<&RoadNetwork>,
) -> Result<FeatureVector, FeatureError> {
    let obs: Vec<&Trip> = trips
        .iter()
        .filter(|t| split.observation.contains(t.day))
        .collect();
    if obs.is_empty() {
        return Err(FeatureError::NoTrips);
    }
    if opts.tln == TlnSource::Proxy && network.is_none() {
        return Err(FeatureError::NetworkRequired);
    }
    let owned: Vec<Trip> = obs.iter().map(|t| (*t).clone()).collect();
    let mut f = extract_habit_features(&owned, network)?;

    let events: Vec<_> = owned
        .iter()
        .flat_map(|t| detect_abrupt_events(t, &opts.thresholds, network))
        .collect();
    let e = accumulate_event_features(&events);
    f.aas = e.aas;
    f.aat = e.aat;
    f.aan = e.aan;
    f.ads = e.ads;
    f.adt = e.adt;
    f.adn = e.adn;
    f.ats = e.ats;
    f.att = e.att;
    f.atn = e.atn;
    f.oss = e.oss;
    f.ost = e.ost;
    f.osn = e.osn;

    let count = |kind: ViolationKind| {
        violations
            .iter()
            .filter(|v| v.kind == kind && split.observation.contains(v.day))
            .count() as f64
    };
    if opts.speeding == SpeedingSource::Records {
        f.osn = count(ViolationKind::Speeding);
    }
    f.tln = match (opts.tln, network) {
        (TlnSource::Proxy, Some(net)) => owned
            .iter()
            .map(|t| detect_light_violation_proxy(t, net, opts.proxy_decel).len())
            .sum::<usize>() as f64,
        _ => count(ViolationKind::LightViolation),
    };
    f.con = count(ViolationKind::Collision);
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverRow {
    pub driver: DriverId,
    pub features: FeatureVector,
    pub label: Label,
}

/// Counts reported alongside an extraction run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub drivers: usize,
    /// Drivers with no observation-period trips.
    pub skipped_drivers: usize,
    pub trips: usize,
    /// Trips whose samples are not exactly 1 s apart.
    pub irregular_trips: usize,
    pub bad_drivers: usize,
    pub truth_speeding: usize,
    pub truth_light: usize,
    pub truth_collision: usize,
    /// Speeding runs detected over all days.
    pub detected_speeding: usize,
    /// Proxy light-violation detections over all days, when a network is given.
    pub detected_light_proxy: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
#[error("driver {driver} trip starting at t={t}: {source}")]
pub struct InvalidTrip {
    pub driver: u32,
    pub t: f64,
    #[source]
    pub source: crate::trip::TrajectoryError,
}

struct DriverOut {
    row: Option<DriverRow>,
    trips: usize,
    irregular: usize,
    speeding: usize,
    proxy: usize,
}

/// Group rows by driver, split into trips, and produce one labelled row per
/// driver with observation-period data. Rows ordered by driver id.
pub fn extract_population(
    rows: &[PointRow],
    violations: &[ViolationRecord],
    split: &PeriodSplit,
    opts: &ExtractOptions,
    network: Option<&RoadNetwork>,
) -> Result<(Vec<DriverRow>, ExtractSummary), InvalidTrip> {
    let mut by_driver: BTreeMap<u32, Vec<&PointRow>> = BTreeMap::new();
    for r in rows {
        by_driver.entry(r.driver_id).or_default().push(r);
    }
    let mut vio_by_driver: BTreeMap<u32, Vec<ViolationRecord>> = BTreeMap::new();
    for v in violations {
        vio_by_driver.entry(v.driver.0).or_default().push(*v);
    }
    let groups: Vec<(u32, Vec<&PointRow>)> = by_driver.into_iter().collect();
    let outs: Result<Vec<DriverOut>, InvalidTrip> = groups
        .into_par_iter()
        .map(|(id, mut rs)| {
            rs.sort_by(|a, b| a.t.total_cmp(&b.t));
            let points: Vec<_> = rs.iter().map(|r| r.point()).collect();
            let days: Vec<u32> = rs.iter().map(|r| r.day).collect();
            let trips = split_trips(&points, &days, opts.trip_gap)
                .into_iter()
                .map(|t| {
                    let t0 = t.points.first().map_or(0.0, |p| p.t);
                    validate_trajectory(t).map_err(|source| InvalidTrip {
                        driver: id,
                        t: t0,
                        source,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let empty = Vec::new();
            let vio = vio_by_driver.get(&id).unwrap_or(&empty);
            let driver = DriverId(id);
            let row = match build_feature_vector(&trips, vio, split, opts, network) {
                Ok(features) => Some(DriverRow {
                    driver,
                    features,
                    label: label_driver(driver, vio, split, opts.min_bad_count),
                }),
                Err(FeatureError::NoTrips) => None,
                Err(e) => unreachable!("validated options: {e}"),
            };
            let speeding = trips
                .iter()
                .flat_map(|t| detect_abrupt_events(t, &opts.thresholds, network))
                .filter(|e| e.kind == EventKind::Speeding)
                .count();
            let proxy = network.map_or(0, |net| {
                trips
                    .iter()
                    .map(|t| detect_light_violation_proxy(t, net, opts.proxy_decel).len())
                    .sum()
            });
            Ok(DriverOut {
                row,
                trips: trips.len(),
                irregular: trips.iter().filter(|t| !t.has_unit_spacing()).count(),
                speeding,
                proxy,
            })
        })
        .collect();
    let outs = outs?;

    let mut summary = ExtractSummary {
        drivers: outs.len(),
        detected_light_proxy: network.map(|_| 0),
        ..ExtractSummary::default()
    };
    let mut table = Vec::with_capacity(outs.len());
    for o in outs {
        summary.trips += o.trips;
        summary.irregular_trips += o.irregular;
        summary.detected_speeding += o.speeding;
        if let Some(p) = summary.detected_light_proxy.as_mut() {
            *p += o.proxy;
        }
        match o.row {
            Some(r) => {
                summary.bad_drivers += usize::from(r.label.is_bad());
                table.push(r);
            }
            None => summary.skipped_drivers += 1,
        }
    }
    for v in violations {
        match v.kind {
            ViolationKind::Speeding => summary.truth_speeding += 1,
            ViolationKind::LightViolation => summary.truth_light += 1,
            ViolationKind::Collision => summary.truth_collision += 1,
        }
    }
    Ok((table, summary))
}

/// Feature rows in column order, one per driver.
pub fn feature_matrix(rows: &[DriverRow]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.features.to_array().to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{DayRange, TrajectoryPoint};

    fn trip(day: u32, speeds: &[f64]) -> Trip {
        Trip {
            driver: DriverId(7),
            id: day,
            day,
            points: speeds
                .iter()
                .enumerate()
                .map(|(i, &v)| TrajectoryPoint {
                    t: f64::from(day) * 86_400.0 + i as f64,
                    v,
                    lng: 120.0,
                    lat: 30.0 + i as f64 * 1e-4,
                    heading: 0.0,
                    driver: DriverId(7),
                    trip: day,
                })
                .collect(),
        }
    }

    fn rec(day: u32, kind: ViolationKind) -> ViolationRecord {
        ViolationRecord {
            driver: DriverId(7),
            day,
            t: 0.0,
            kind,
            lng: 0.0,
            lat: 0.0,
        }
    }

    fn split() -> PeriodSplit {
        PeriodSplit::new(DayRange::new(0, 1), DayRange::new(2, 3)).unwrap()
    }

    #[test]
    fn performance_data_is_ignored() {
        let obs = vec![trip(0, &[0.0, 2.0, 5.5, 5.0]), trip(1, &[3.0, 3.0])];
        let mut all = obs.clone();
        all.push(trip(2, &[0.0, 30.0, 0.0]));
        let mut v = vec![rec(0, ViolationKind::LightViolation), rec(1, ViolationKind::Collision)];
        let opts = ExtractOptions::default();
        let a = build_feature_vector(&obs, &v, &split(), &opts, None).unwrap();
        v.push(rec(3, ViolationKind::LightViolation));
        v.push(rec(2, ViolationKind::Speeding));
        let b = build_feature_vector(&all, &v, &split(), &opts, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.tln, 1.0);
        assert_eq!(a.con, 1.0);
        assert_eq!(a.aan, 1.0);
        assert_eq!(a.maxa, 3.5);
    }

    #[test]
    fn speeding_from_records() {
        let obs = vec![trip(0, &[20.0, 20.0, 10.0])];
        let v = vec![rec(0, ViolationKind::Speeding), rec(1, ViolationKind::Speeding)];
        let mut opts = ExtractOptions::default();
        let traj = build_feature_vector(&obs, &v, &split(), &opts, None).unwrap();
        assert_eq!(traj.osn, 1.0);
        assert_eq!(traj.ost, 1.0);
        opts.speeding = SpeedingSource::Records;
        let recs = build_feature_vector(&obs, &v, &split(), &opts, None).unwrap();
        assert_eq!(recs.osn, 2.0);
        assert_eq!(recs.ost, traj.ost);
    }

    #[test]
    fn errors() {
        let opts = ExtractOptions::default();
        let late = vec![trip(3, &[1.0, 2.0])];
        assert_eq!(
            build_feature_vector(&late, &[], &split(), &opts, None),
            Err(FeatureError::NoTrips)
        );
        let proxy = ExtractOptions {
            tln: TlnSource::Proxy,
            ..opts
        };
        assert_eq!(
            build_feature_vector(&[trip(0, &[1.0, 2.0])], &[], &split(), &proxy, None),
            Err(FeatureError::NetworkRequired)
        );
    }

    #[test]
    fn trip_order_does_not_matter() {
        let trips = vec![
            trip(0, &[0.0, 4.0, 8.0, 12.5, 18.0, 17.0]),
            trip(1, &[9.0, 5.0, 1.0]),
        ];
        let opts = ExtractOptions::default();
        let a = build_feature_vector(&trips, &[], &split(), &opts, None).unwrap();
        let rev: Vec<Trip> = trips.iter().rev().cloned().collect();
        let b = build_feature_vector(&rev, &[], &split(), &opts, None).unwrap();
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

use super::{acceleration_series, FeatureError, FeatureVector};
use crate::geo::heading_delta;
use crate::simgen::RoadNetwork;
use crate::types::Trip;

/// Heading change that counts as a turn when no network is available.
const TURN_DEG: f64 = 45.0;

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Intersections crossed in one trip. With a network, every change of the
/// edge under the vehicle is a crossing. Without one only turns are visible,
/// so straight crossings go uncounted.
fn intersections(trip: &Trip, network: Option<&RoadNetwork>) -> usize {
    match network {
        Some(net) => {
            let mut last = None;
            let mut n = 0;
            for p in &trip.points {
                if let Some((e, _)) = net.locate(p.lng, p.lat, p.heading) {
                    if last.is_some_and(|l| l != e) {
                        n += 1;
                    }
                    last = Some(e);
                }
            }
            n
        }
        None => trip
            .points
            .windows(2)
            .filter(|w| heading_delta(w[0].heading, w[1].heading) >= TURN_DEG)
            .count(),
    }
}

/// Trip, acceleration, speed and intersection features; event fields stay
/// zero. Averages over empty sets are zero.
pub fn extract_habit_features(
    trips: &[Trip],
    network: Option<&RoadNetwork>,
) -> Result<FeatureVector, FeatureError> {
    if trips.is_empty() {
        return Err(FeatureError::NoTrips);
    }
    let mut f = FeatureVector::default();
    let (mut acc_sum, mut acc_n, mut dec_sum, mut dec_n) = (0.0, 0, 0.0, 0);
    let (mut v_sum, mut v_n) = (0.0, 0);
    for trip in trips {
        f.avgt += trip.duration();
        f.avgs += trip.distance();
        for p in &trip.points {
            f.maxv = f.maxv.max(p.v);
            v_sum += p.v;
            v_n += 1;
        }
        if let Ok(series) = acceleration_series(trip) {
            for (_, a) in series {
                if a > 0.0 {
                    f.maxa = f.maxa.max(a);
                    acc_sum += a;
                    acc_n += 1;
                } else if a < 0.0 {
                    f.maxd = f.maxd.max(-a);
                    dec_sum -= a;
                    dec_n += 1;
                }
            }
        }
        f.isn += intersections(trip, network) as f64;
    }
    f.avgt /= trips.len() as f64;
    f.avgs /= trips.len() as f64;
    f.avga = mean(acc_sum, acc_n);
    f.avgd = mean(dec_sum, dec_n);
    f.avgv = mean(v_sum, v_n);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{DriverId, TrajectoryPoint};

    fn trip(id: u32, samples: &[(f64, f64, f64)]) -> Trip {
        Trip {
            driver: DriverId(1),
            id,
            day: 0,
            points: samples
                .iter()
                .enumerate()
                .map(|(i, &(v, lat, h))| TrajectoryPoint {
                    t: i as f64,
                    v,
                    lng: 120.0,
                    lat,
                    heading: h,
                    driver: DriverId(1),
                    trip: id,
                })
                .collect(),
        }
    }

    #[test]
    fn hand_computed() {
        let a = trip(0, &[(0.0, 30.0, 0.0), (2.0, 30.0001, 0.0), (3.0, 30.0002, 90.0)]);
        let b = trip(1, &[(6.0, 30.0, 0.0), (4.0, 30.0001, 0.0)]);
        let f = extract_habit_features(&[a.clone(), b.clone()], None).unwrap();
        assert_eq!(f.avgt, 1.5);
        assert!((f.avgs - (a.distance() + b.distance()) / 2.0).abs() < 1e-9);
        assert_eq!(f.maxa, 2.0);
        assert_eq!(f.avga, 1.5);
        assert_eq!(f.maxd, 2.0);
        assert_eq!(f.avgd, 2.0);
        assert_eq!(f.maxv, 6.0);
        assert_eq!(f.avgv, 3.0);
        assert_eq!(f.isn, 1.0);
        assert_eq!(f.osn + f.tln + f.con, 0.0);
    }

    #[test]
    fn no_trips() {
        assert_eq!(extract_habit_features(&[], None), Err(FeatureError::NoTrips));
    }

    #[test]
    fn network_counts_edge_changes() {
        use crate::simgen::GridSpec;
        let net = RoadNetwork::grid(GridSpec::default()).unwrap();
        let e0 = net.edge_between(net.node_at(0, 0), net.node_at(1, 0)).unwrap();
        let e1 = net.edge_between(net.node_at(1, 0), net.node_at(2, 0)).unwrap();
        let pts: Vec<TrajectoryPoint> = [(e0, 390.0), (e0, 399.0), (e1, 8.0), (e1, 20.0)]
            .iter()
            .enumerate()
            .map(|(i, &(e, pos))| {
                let (lng, lat) = net.edge_lnglat(e, pos);
                TrajectoryPoint {
                    t: i as f64,
                    v: 10.0,
                    lng,
                    lat,
                    heading: net.edges[e].heading,
                    driver: DriverId(1),
                    trip: 0,
                }
            })
            .collect();
        let tr = Trip {
            driver: DriverId(1),
            id: 0,
            day: 0,
            points: pts,
        };
        assert_eq!(extract_habit_features(std::slice::from_ref(&tr), Some(&net)).unwrap().isn, 1.0);
        assert_eq!(extract_habit_features(&[tr], None).unwrap().isn, 0.0);
    }
}

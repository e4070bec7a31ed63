use super::network::RoadNetwork;
use crate::types::{Trip, ViolationKind, ViolationRecord};

/// Hard stops within this distance upstream of a signal count.
pub const PROXY_SIGNAL_RANGE_M: f64 = 30.0;

/// Trajectory-only light-violation detection: a deceleration harder than
/// `threshold` within 30 m of a downstream signal. Consecutive qualifying
/// points collapse into one record stamped at the first of them.
pub fn detect_light_violation_proxy(
    trip: &Trip,
    network: &RoadNetwork,
    threshold: f64,
) -> Vec<ViolationRecord> {
    let mut out = Vec::new();
    let mut in_run = false;
    for k in 1..trip.points.len() {
        let (a, b) = (&trip.points[k - 1], &trip.points[k]);
        let decel = -(b.v - a.v) / (b.t - a.t);
        let near_signal = network
            .locate(b.lng, b.lat, b.heading)
            .map(|(e, pos)| {
                let edge = &network.edges[e];
                network.nodes[edge.to].signal.is_some() && edge.length - pos <= PROXY_SIGNAL_RANGE_M
            })
            .unwrap_or(false);
        let hit = decel > threshold && near_signal;
        if hit && !in_run {
            out.push(ViolationRecord {
                driver: trip.driver,
                day: trip.day,
                t: b.t,
                kind: ViolationKind::LightViolation,
                lng: b.lng,
                lat: b.lat,
            });
        }
        in_run = hit;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::GridSpec;
    use crate::types::{DriverId, TrajectoryPoint};

    /// Eastbound along row 0 from node (0,0); `pos` is distance from that node.
    fn trip(net: &RoadNetwork, samples: &[(f64, f64)]) -> Trip {
        let e = net.edge_between(net.node_at(0, 0), net.node_at(1, 0)).unwrap();
        let points = samples
            .iter()
            .enumerate()
            .map(|(i, &(pos, v))| {
                let (lng, lat) = net.edge_lnglat(e, pos);
                TrajectoryPoint {
                    t: i as f64,
                    v,
                    lng,
                    lat,
                    heading: 90.0,
                    driver: DriverId(1),
                    trip: 0,
                }
            })
            .collect();
        Trip {
            driver: DriverId(1),
            id: 0,
            day: 3,
            points,
        }
    }

    #[test]
    fn hard_stop_before_signal_is_flagged() {
        let net = RoadNetwork::grid(GridSpec::default()).unwrap();
        let tr = trip(&net, &[(375.0, 12.0), (390.0, 7.0)]);
        let recs = detect_light_violation_proxy(&tr, &net, 4.5);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].day, 3);
        assert_eq!(recs[0].kind, ViolationKind::LightViolation);
    }

    #[test]
    fn far_from_signal_never_flagged() {
        let net = RoadNetwork::grid(GridSpec::default()).unwrap();
        let tr = trip(&net, &[(100.0, 15.0), (110.0, 5.0)]);
        assert!(detect_light_violation_proxy(&tr, &net, 4.5).is_empty());
    }

    #[test]
    fn gentle_stop_not_flagged() {
        let net = RoadNetwork::grid(GridSpec::default()).unwrap();
        let tr = trip(&net, &[(380.0, 6.0), (385.0, 4.0), (388.0, 2.0), (389.0, 0.0)]);
        assert!(detect_light_violation_proxy(&tr, &net, 4.5).is_empty());
    }

    #[test]
    fn consecutive_hits_collapse() {
        let net = RoadNetwork::grid(GridSpec::default()).unwrap();
        let tr = trip(&net, &[(360.0, 16.0), (375.0, 10.0), (385.0, 5.0), (390.0, 0.0)]);
        assert_eq!(detect_light_violation_proxy(&tr, &net, 4.5).len(), 1);
    }
}

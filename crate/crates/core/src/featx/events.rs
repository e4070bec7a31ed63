use serde::{Deserialize, Serialize};

use super::{EventThresholds, FeatureVector};
use crate::geo::{heading_delta, path_length};
use crate::simgen::RoadNetwork;
use crate::types::Trip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    AbruptAccel,
    AbruptDecel,
    AbruptTurn,
    Speeding,
}

/// A maximal run of qualifying samples, spanning points `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbruptEvent {
    pub kind: EventKind,
    pub start: usize,
    pub end: usize,
    /// Path length over the span, m.
    pub distance: f64,
    /// Elapsed time over the span, s.
    pub duration: f64,
}

/// Merge consecutive qualifying indices. Acceleration samples are steps
/// (`k` covers points `k-1..=k`); point samples cover a single point and are
/// widened to the adjacent step when they stand alone.
fn merge_runs(qualifying: &[bool], step_indexed: bool) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < qualifying.len() {
        if !qualifying[i] {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < qualifying.len() && qualifying[i + 1] {
            i += 1;
        }
        runs.push((first, i));
        i += 1;
    }
    runs.into_iter()
        .map(|(a, b)| {
            if step_indexed {
                (a - 1, b)
            } else if a < b {
                (a, b)
            } else if a > 0 {
                (a - 1, a)
            } else {
                (a, a + 1)
            }
        })
        .collect()
}

fn make_event(trip: &Trip, kind: EventKind, (start, end): (usize, usize)) -> AbruptEvent {
    let span = &trip.points[start..=end];
    AbruptEvent {
        kind,
        start,
        end,
        distance: path_length(span),
        duration: span[span.len() - 1].t - span[0].t,
    }
}

/// Detect abrupt acceleration, deceleration, turning and speeding runs.
/// Speed limits come from the network edge under each point when a network
/// is given, otherwise from `thr.speed_limit`.
pub fn detect_abrupt_events(
    trip: &Trip,
    thr: &EventThresholds,
    network: Option<&RoadNetwork>,
) -> Vec<AbruptEvent> {
    let pts = &trip.points;
    let n = pts.len();
    if n < 2 {
        return Vec::new();
    }
    let mut accel = vec![false; n];
    let mut decel = vec![false; n];
    let mut turn = vec![false; n];
    let mut speeding = vec![false; n];
    for k in 0..n {
        let p = &pts[k];
        if k > 0 {
            let q = &pts[k - 1];
            let a = (p.v - q.v) / (p.t - q.t);
            accel[k] = a > thr.acc;
            decel[k] = -a > thr.dec;
            turn[k] = p.v > thr.v_star && heading_delta(q.heading, p.heading) > thr.ang;
        }
        let limit = network
            .and_then(|net| {
                net.locate(p.lng, p.lat, p.heading)
                    .map(|(e, _)| net.edges[e].limit)
            })
            .unwrap_or(thr.speed_limit);
        speeding[k] = p.v > limit;
    }
    let mut out = Vec::new();
    for (kind, flags, step) in [
        (EventKind::AbruptAccel, &accel, true),
        (EventKind::AbruptDecel, &decel, true),
        (EventKind::AbruptTurn, &turn, false),
        (EventKind::Speeding, &speeding, false),
    ] {
        out.extend(
            merge_runs(flags, step)
                .into_iter()
                .map(|span| make_event(trip, kind, span)),
        );
    }
    out
}

/// Sum distance and duration and count events per kind into the aggressive
/// and speeding fields; every other field stays zero.
pub fn accumulate_event_features(events: &[AbruptEvent]) -> FeatureVector {
    let mut f = FeatureVector::default();
    for e in events {
        let (s, t, n) = match e.kind {
            EventKind::AbruptAccel => (&mut f.aas, &mut f.aat, &mut f.aan),
            EventKind::AbruptDecel => (&mut f.ads, &mut f.adt, &mut f.adn),
            EventKind::AbruptTurn => (&mut f.ats, &mut f.att, &mut f.atn),
            EventKind::Speeding => (&mut f.oss, &mut f.ost, &mut f.osn),
        };
        *s += e.distance;
        *t += e.duration;
        *n += 1.0;
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::haversine_distance;
    use crate::types::{DriverId, TrajectoryPoint};

    /// Northbound samples 1 s apart with explicit speeds and headings; the
    /// position advances by the speed so distances are realistic.
    fn trip(samples: &[(f64, f64)]) -> Trip {
        let mut lat = 30.0;
        let points = samples
            .iter()
            .enumerate()
            .map(|(i, &(v, h))| {
                lat += v / 111_195.0;
                TrajectoryPoint {
                    t: i as f64,
                    v,
                    lng: 120.0,
                    lat,
                    heading: h,
                    driver: DriverId(0),
                    trip: 0,
                }
            })
            .collect();
        Trip {
            driver: DriverId(0),
            id: 0,
            day: 0,
            points,
        }
    }

    fn thr() -> EventThresholds {
        EventThresholds {
            speed_limit: 100.0,
            ..EventThresholds::default()
        }
    }

    #[test]
    fn accel_run_merges() {
        // accelerations 2.9, 3.1, 3.2, 1.0
        let tr = trip(&[(0.0, 0.0), (2.9, 0.0), (6.0, 0.0), (9.2, 0.0), (10.2, 0.0)]);
        let ev = detect_abrupt_events(&tr, &thr(), None);
        assert_eq!(ev.len(), 1);
        let e = ev[0];
        assert_eq!(e.kind, EventKind::AbruptAccel);
        assert_eq!((e.start, e.end), (1, 3));
        assert_eq!(e.duration, 2.0);
        assert!((e.distance - path_length(&tr.points[1..=3])).abs() < 1e-9);
    }

    #[test]
    fn sharp_turn_at_speed() {
        let tr = trip(&[(10.0, 10.0), (10.0, 45.0), (10.0, 45.0)]);
        let ev = detect_abrupt_events(&tr, &thr(), None);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].kind, EventKind::AbruptTurn);
        assert_eq!((ev[0].start, ev[0].end), (0, 1));
        assert_eq!(ev[0].duration, 1.0);
        assert!((ev[0].distance - haversine_distance(&tr.points[0], &tr.points[1])).abs() < 1e-12);
    }

    #[test]
    fn quiet_trips_have_no_events() {
        assert!(detect_abrupt_events(&trip(&[]), &thr(), None).is_empty());
        let tr = trip(&[(5.0, 0.0), (6.0, 0.0), (7.0, 10.0), (6.5, 10.0)]);
        assert!(detect_abrupt_events(&tr, &thr(), None).is_empty());
    }

    #[test]
    fn speeding_uses_constant_limit() {
        let mut t = thr();
        t.speed_limit = 16.7;
        let tr = trip(&[(15.0, 0.0), (17.0, 0.0), (17.5, 0.0), (16.0, 0.0), (18.0, 0.0)]);
        let ev: Vec<_> = detect_abrupt_events(&tr, &t, None)
            .into_iter()
            .filter(|e| e.kind == EventKind::Speeding)
            .collect();
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].start, ev[0].end, ev[0].duration), (1, 2, 1.0));
        assert_eq!((ev[1].start, ev[1].end, ev[1].duration), (3, 4, 1.0));
    }

    #[test]
    fn accumulation() {
        let one = AbruptEvent {
            kind: EventKind::AbruptAccel,
            start: 0,
            end: 3,
            distance: 37.0,
            duration: 3.0,
        };
        let f = accumulate_event_features(&[one]);
        assert_eq!((f.aas, f.aat, f.aan), (37.0, 3.0, 1.0));
        assert_eq!(f.ads + f.ats + f.oss + f.osn, 0.0);

        assert_eq!(accumulate_event_features(&[]), FeatureVector::default());

        let sp = |d, t| AbruptEvent {
            kind: EventKind::Speeding,
            start: 0,
            end: 1,
            distance: d,
            duration: t,
        };
        let f = accumulate_event_features(&[sp(100.0, 8.0), sp(50.0, 4.0)]);
        assert_eq!((f.oss, f.ost, f.osn), (150.0, 12.0, 2.0));
    }

    #[test]
    fn every_qualifying_sample_in_exactly_one_event() {
        let speeds = [0.0, 3.5, 7.2, 7.3, 11.0, 14.5, 14.0, 9.0, 4.0, 4.2, 8.0, 3.0];
        let tr = trip(&speeds.iter().map(|&v| (v, 0.0)).collect::<Vec<_>>());
        let t = thr();
        let ev = detect_abrupt_events(&tr, &t, None);
        for (kind, pred) in [
            (EventKind::AbruptAccel, Box::new(|a: f64| a > t.acc) as Box<dyn Fn(f64) -> bool>),
            (EventKind::AbruptDecel, Box::new(|a: f64| -a > t.dec)),
        ] {
            let q: Vec<usize> = (1..speeds.len())
                .filter(|&k| pred(speeds[k] - speeds[k - 1]))
                .collect();
            let mine: Vec<_> = ev.iter().filter(|e| e.kind == kind).collect();
            assert!(mine.len() <= q.len());
            for k in q {
                let owners = mine.iter().filter(|e| e.start < k && k <= e.end).count();
                assert_eq!(owners, 1, "{kind:?} step {k}");
            }
        }
    }

    fn samples(min: usize) -> impl proptest::strategy::Strategy<Value = Vec<(f64, f64)>> {
        use proptest::prelude::*;
        let heading = prop::sample::select(vec![0.0, 20.0, 90.0, 180.0]);
        prop::collection::vec((0.0f64..30.0, heading), min..40)
    }

    fn add(a: &FeatureVector, b: &FeatureVector) -> FeatureVector {
        let (x, y) = (a.to_array(), b.to_array());
        FeatureVector::from_array(std::array::from_fn(|i| x[i] + y[i]))
    }

    proptest::proptest! {
        #[test]
        fn qualifying_steps_have_one_owner(s in samples(2)) {
            let tr = trip(&s);
            let t = EventThresholds { speed_limit: 16.7, ..EventThresholds::default() };
            let ev = detect_abrupt_events(&tr, &t, None);
            let accel: Vec<usize> = (1..s.len()).filter(|&k| s[k].0 - s[k - 1].0 > t.acc).collect();
            let fast: Vec<usize> = (0..s.len()).filter(|&k| s[k].0 > t.speed_limit).collect();
            let of = |kind| ev.iter().filter(move |e: &&AbruptEvent| e.kind == kind);
            proptest::prop_assert!(of(EventKind::AbruptAccel).count() <= accel.len());
            proptest::prop_assert!(of(EventKind::Speeding).count() <= fast.len());
            for k in accel {
                proptest::prop_assert_eq!(of(EventKind::AbruptAccel).filter(|e| e.start < k && k <= e.end).count(), 1);
            }
            for k in fast {
                proptest::prop_assert_eq!(of(EventKind::Speeding).filter(|e| e.start <= k && k <= e.end).count(), 1);
            }
        }

        #[test]
        fn accumulation_is_additive(a in samples(0), b in samples(0)) {
            let t = EventThresholds { speed_limit: 16.7, ..EventThresholds::default() };
            let ea = detect_abrupt_events(&trip(&a), &t, None);
            let eb = detect_abrupt_events(&trip(&b), &t, None);
            let both: Vec<_> = ea.iter().chain(&eb).copied().collect();
            let whole = accumulate_event_features(&both).to_array();
            let parts = add(&accumulate_event_features(&ea), &accumulate_event_features(&eb)).to_array();
            for (x, y) in whole.iter().zip(parts) {
                proptest::prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }
    }
}

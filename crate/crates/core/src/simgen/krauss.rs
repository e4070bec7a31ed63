//! Krauss car-following at a fixed 1 s step.

use rand::Rng;

use super::{DriverProfile, DT};

/// Braking beyond `dec` is allowed up to this multiple of it.
pub const EMERGENCY_DECEL_FACTOR: f64 = 2.0;

/// Largest speed from which the follower can still stop behind a leader
/// braking at `dec`, given the current bumper gap.
pub fn krauss_safe_speed(v_follower: f64, v_leader: f64, gap: f64, dec: f64, tau: f64) -> f64 {
    let v = v_leader + (gap - v_leader * tau) / ((v_leader + v_follower) / (2.0 * dec) + tau);
    v.max(0.0)
}

/// The vehicle ahead as seen by the follower: its speed and the raw bumper
/// gap (before subtracting the follower's minimum gap).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leader {
    pub speed: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub edges: Vec<usize>,
    pub lengths: Vec<f64>,
}

impl Route {
    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub edge: usize,
    pub pos: f64,
    pub speed: f64,
    pub cursor: usize,
}

impl VehicleState {
    pub fn start(route: &Route) -> Self {
        Self {
            edge: route.edges[0],
            pos: 0.0,
            speed: 0.0,
            cursor: 0,
        }
    }

    /// Move `speed * DT` along the route. Returns the new state and whether
    /// the route end was reached (position then clamps to the last edge end).
    pub fn advance(&self, speed: f64, route: &Route) -> (VehicleState, bool) {
        let mut next = VehicleState {
            speed,
            pos: self.pos + speed * DT,
            ..*self
        };
        while next.pos >= route.lengths[next.cursor] {
            if next.cursor + 1 == route.edges.len() {
                next.pos = route.lengths[next.cursor];
                return (next, true);
            }
            next.pos -= route.lengths[next.cursor];
            next.cursor += 1;
            next.edge = route.edges[next.cursor];
        }
        (next, false)
    }
}

/// Speed the driver aims for before imperfection: bounded by acceleration,
/// desired max speed, the driver-adjusted limit and the safe speed, and
/// never dropping faster than emergency braking allows.
pub fn desired_speed(v: f64, profile: &DriverProfile, limit: f64, safe: Option<f64>) -> f64 {
    let mut target = (v + profile.acc * DT).min(profile.s_max).min(limit);
    if let Some(s) = safe {
        target = target.min(s);
    }
    target.max(v - EMERGENCY_DECEL_FACTOR * profile.dec * DT)
}

/// Random dawdling: subtract `r * sigma * acc * DT`, r in [0, 1).
pub fn apply_imperfection(v_des: f64, profile: &DriverProfile, r: f64) -> f64 {
    (v_des - r * profile.sigma * profile.acc * DT).max(0.0)
}

pub fn krauss_step<R: Rng>(
    state: &VehicleState,
    leader: Option<Leader>,
    profile: &DriverProfile,
    limit: f64,
    route: &Route,
    rng: &mut R,
) -> VehicleState {
    let safe = leader.map(|l| {
        krauss_safe_speed(
            state.speed,
            l.speed,
            (l.gap - profile.g_min).max(0.0),
            profile.dec,
            profile.tau,
        )
    });
    let v_des = desired_speed(state.speed, profile, limit, safe);
    let r: f64 = rng.random();
    let v_next = apply_imperfection(v_des, profile, r);
    state.advance(v_next, route).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use crate::simgen::{standard_style, DriverProfile};
    use crate::types::DriverId;
    use proptest::prelude::*;

    fn profile(sigma: f64) -> DriverProfile {
        let mut p = DriverProfile::from_style(DriverId(0), 1, &standard_style());
        p.sigma = sigma;
        p
    }

    fn straight(len: f64, n: usize) -> Route {
        Route {
            edges: (0..n).collect(),
            lengths: vec![len; n],
        }
    }

    #[test]
    fn safe_speed_reference_value() {
        let v = krauss_safe_speed(10.0, 0.0, 10.0, 4.5, 1.0);
        assert!((v - 10.0 / (10.0 / 9.0 + 1.0)).abs() < 1e-12);
        assert!((v - 4.7368).abs() < 1e-4);
    }

    #[test]
    fn safe_speed_equilibrium_and_bumper() {
        for v in [0.5, 5.0, 13.9, 30.0] {
            let s = krauss_safe_speed(v, v, v * 1.3, 3.0, 1.3);
            assert!((s - v).abs() < 1e-12);
        }
        assert_eq!(krauss_safe_speed(7.0, 0.0, 0.0, 4.5, 1.0), 0.0);
    }

    #[test]
    fn free_road_first_step_applies_acc() {
        let route = straight(400.0, 2);
        let mut rng = seed::rng(1);
        let s = krauss_step(&VehicleState::start(&route), None, &profile(0.0), 16.7, &route, &mut rng);
        assert!((s.speed - 2.6).abs() < 1e-12);
        assert!((s.pos - 2.6).abs() < 1e-12);
    }

    #[test]
    fn saturates_at_s_max() {
        let route = straight(1e6, 1);
        let mut p = profile(0.0);
        p.s_max = 14.0;
        let mut s = VehicleState {
            speed: 14.0,
            ..VehicleState::start(&route)
        };
        let mut rng = seed::rng(2);
        for _ in 0..20 {
            s = krauss_step(&s, None, &p, 50.0, &route, &mut rng);
            assert_eq!(s.speed, 14.0);
        }
    }

    #[test]
    fn never_exceeds_safe_speed_behind_stopped_leader() {
        let route = straight(1e4, 1);
        let p = profile(0.0);
        let mut s = VehicleState {
            speed: 16.0,
            ..VehicleState::start(&route)
        };
        let leader_back = 300.0;
        let mut rng = seed::rng(3);
        for _ in 0..200 {
            let leader = Leader {
                speed: 0.0,
                gap: leader_back - s.pos,
            };
            let bound =
                krauss_safe_speed(s.speed, 0.0, (leader.gap - p.g_min).max(0.0), p.dec, p.tau);
            s = krauss_step(&s, Some(leader), &p, 70.0, &route, &mut rng);
            assert!(s.speed <= bound + 1e-12);
            assert!(s.pos < leader_back);
        }
    }

    #[test]
    fn advance_crosses_edges() {
        let route = straight(10.0, 3);
        let (s, done) = VehicleState {
            edge: 0,
            pos: 8.0,
            speed: 5.0,
            cursor: 0,
        }
        .advance(5.0, &route);
        assert!(!done);
        assert_eq!((s.cursor, s.edge), (1, 1));
        assert!((s.pos - 3.0).abs() < 1e-12);
        let (s, done) = s.advance(30.0, &route);
        assert!(done);
        assert_eq!(s.cursor, 2);
        assert_eq!(s.pos, 10.0);
    }

    proptest! {
        #[test]
        fn speed_stays_in_bounds(v in 0.0..40.0f64, sigma in 0.0..1.0f64, seed in 0u64..1000,
                                 gap in 0.0..200.0f64, vl in 0.0..30.0f64) {
            let route = straight(1e6, 1);
            let mut p = profile(sigma);
            p.s_max = 33.0;
            let st = VehicleState { speed: v.min(p.s_max), ..VehicleState::start(&route) };
            let mut rng = seed::rng(seed);
            let n = krauss_step(&st, Some(Leader { speed: vl, gap }), &p, 25.0, &route, &mut rng);
            prop_assert!(n.speed >= 0.0);
            prop_assert!(n.speed <= p.s_max.max(st.speed));
            prop_assert!(n.pos >= st.pos);
        }
    }
}

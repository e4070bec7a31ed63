use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::krauss::{apply_imperfection, desired_speed, krauss_safe_speed, Route, VehicleState};
use super::network::{GridSpec, Light, RoadNetwork};
use super::style::{DriverProfile, RouteEndpoints};
use super::{SimError, DT};
use crate::io::PointRow;
use crate::seed;
use crate::types::{PeriodSplit, ViolationKind, ViolationRecord};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Routes must beat the minimum trip length by this much so that corner
/// cutting between 1 Hz samples never drops a trip below the minimum.
const ROUTE_SLACK_M: f64 = 50.0;

/// Vehicles stopping for a signal aim this far short of the stop line.
const STOP_LINE_MARGIN_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub drivers: usize,
    pub days: u32,
    /// Window start, seconds after midnight.
    pub day_start: f64,
    /// Window end, seconds after midnight. Departures fall inside the window.
    pub day_end: f64,
    pub seed: u64,
    pub grid: GridSpec,
    pub min_trip_length: f64,
    pub split: PeriodSplit,
    /// Habitual departure times are spread uniformly over this many seconds
    /// after the window opens.
    pub departure_spread: f64,
    /// Day-to-day departure jitter, standard deviation in seconds.
    pub departure_jitter: f64,
    /// Desired max speed at which a driver cruises exactly at the posted
    /// limit; the limit is scaled by `s_max / compliance_ref_speed`.
    pub compliance_ref_speed: f64,
    /// Day-to-day relative standard deviation of that scaling.
    pub compliance_dev: f64,
    /// Cornering speed of a driver with unit compliance, m/s.
    pub turn_speed: f64,
    pub vehicle_length: f64,
    /// Seconds above the limit before a speeding episode is logged.
    pub speeding_min_duration: u32,
    /// Vehicles still driving this long after the window closes are stopped.
    pub overrun: f64,
    /// Chance per second, per unit of imperfection, that a driver starts an
    /// attention lapse and stops reacting to the vehicle ahead.
    pub lapse_rate: f64,
    /// Length of one lapse in steps.
    pub lapse_duration: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            drivers: 22_631,
            days: 40,
            day_start: 6.0 * 3600.0,
            day_end: 10.0 * 3600.0,
            seed: 0,
            grid: GridSpec::default(),
            min_trip_length: 3_000.0,
            split: PeriodSplit::halves(40).expect("40 days split"),
            departure_spread: 3_600.0,
            departure_jitter: 300.0,
            compliance_ref_speed: 37.0,
            compliance_dev: 0.05,
            turn_speed: 7.5,
            vehicle_length: 5.0,
            speeding_min_duration: 3,
            overrun: 3.0 * 3600.0,
            lapse_rate: 1e-4,
            lapse_duration: 2,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::ConfigInvalid(m.to_string()));
        if self.drivers == 0 || self.days == 0 {
            return bad("driver count and day count must be positive");
        }
        if !(self.day_end > self.day_start) || self.day_start < 0.0 || self.day_end > SECONDS_PER_DAY
        {
            return bad("daily window must be a non-empty interval within one day");
        }
        if !(self.min_trip_length > 0.0) {
            return bad("minimum trip length must be positive");
        }
        if self.split.performance.last >= self.days {
            return bad("period split extends past the simulated days");
        }
        if !(self.departure_spread >= 0.0) || !(self.departure_jitter >= 0.0) {
            return bad("departure spread and jitter must be non-negative");
        }
        if !(self.compliance_ref_speed > 0.0) || !(self.compliance_dev >= 0.0) {
            return bad("compliance reference must be positive");
        }
        if !(self.turn_speed > 0.0) || !(self.vehicle_length > 0.0) || !(self.overrun >= 0.0) {
            return bad("turn speed and vehicle length must be positive");
        }
        if !(0.0..=1.0).contains(&self.lapse_rate) || self.lapse_duration == 0 {
            return bad("lapse rate must lie in [0, 1] and lapses must last at least one step");
        }
        if self.speeding_min_duration == 0 {
            return bad("speeding episodes need a positive minimum duration");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub network: RoadNetwork,
    /// Population with route endpoints filled in.
    pub population: Vec<DriverProfile>,
    /// Ordered by day, then driver, then time.
    pub points: Vec<PointRow>,
    /// Ground truth, ordered by day, driver, time and kind.
    pub violations: Vec<ViolationRecord>,
}

/// Pick home/work nodes at least the minimum trip length apart for every
/// driver that has none yet.
pub fn assign_routes(
    population: &mut [DriverProfile],
    network: &RoadNetwork,
    min_trip_length: f64,
    seed: u64,
) -> Result<(), SimError> {
    let base = seed::derive_seed(seed, "route");
    let n = network.nodes.len();
    for p in population.iter_mut().filter(|p| p.route.is_none()) {
        let mut rng = seed::rng(seed::derive_indexed(base, u64::from(p.id.0)));
        let home = rng.random_range(0..n);
        let far: Vec<usize> = (0..n)
            .filter(|&w| network.grid_distance(home, w) >= min_trip_length + ROUTE_SLACK_M)
            .collect();
        let far = if far.is_empty() {
            // fall back to the best-connected corner pair
            let corner = network.node_at(0, 0);
            let opposite = network.node_at(network.spec.cols - 1, network.spec.rows - 1);
            if network.grid_distance(corner, opposite) < min_trip_length + ROUTE_SLACK_M {
                return Err(SimError::ConfigInvalid(format!(
                    "grid too small for {min_trip_length} m trips"
                )));
            }
            p.route = Some(RouteEndpoints {
                home: corner,
                work: opposite,
                x_first: rng.random(),
            });
            continue;
        } else {
            far
        };
        let work = far[rng.random_range(0..far.len())];
        p.route = Some(RouteEndpoints {
            home,
            work,
            x_first: rng.random(),
        });
    }
    Ok(())
}

pub fn run_simulation(
    config: &SimConfig,
    population: &[DriverProfile],
) -> Result<SimOutput, SimError> {
    config.validate()?;
    if population.is_empty() {
        return Err(SimError::ConfigInvalid("empty population".into()));
    }
    let network = RoadNetwork::grid(config.grid)?;
    let mut population = population.to_vec();
    assign_routes(&mut population, &network, config.min_trip_length, config.seed)?;

    let routes: Vec<Route> = population
        .iter()
        .map(|p| {
            let ep = p.route.expect("routes assigned");
            let edges = network.route(ep.home, ep.work, ep.x_first);
            let lengths = edges.iter().map(|&e| network.edges[e].length).collect();
            Route { edges, lengths }
        })
        .collect();

    let dep_base = seed::derive_seed(config.seed, "departure");
    let habitual: Vec<f64> = population
        .iter()
        .map(|p| {
            let mut rng = seed::rng(seed::derive_indexed(dep_base, u64::from(p.id.0)));
            rng.random::<f64>() * config.departure_spread
        })
        .collect();

    let day_base = seed::derive_seed(config.seed, "day");
    let ctx = DayContext {
        config,
        network: &network,
        population: &population,
        routes: &routes,
        habitual: &habitual,
    };
    let days: Vec<DayOutput> = (0..config.days)
        .into_par_iter()
        .map(|day| ctx.simulate(day, seed::derive_indexed(day_base, u64::from(day))))
        .collect();

    let mut points = Vec::new();
    let mut violations = Vec::new();
    for d in days {
        for track in d.tracks {
            points.extend(track);
        }
        violations.extend(d.violations);
    }
    violations.sort_by(|a, b| {
        (a.day, a.driver, a.kind)
            .cmp(&(b.day, b.driver, b.kind))
            .then(a.t.total_cmp(&b.t))
    });
    Ok(SimOutput {
        network,
        population,
        points,
        violations,
    })
}

struct DayOutput {
    tracks: Vec<Vec<PointRow>>,
    violations: Vec<ViolationRecord>,
}

struct Vehicle {
    driver: usize,
    state: VehicleState,
    prev: VehicleState,
    compliance: f64,
    committed: Option<usize>,
    speeding_run: u32,
    speeding_start: (f64, f64, f64),
    leader: Option<usize>,
    /// Bumper gap to `leader` before the last move.
    leader_gap: f64,
    /// Remaining steps of the current attention lapse.
    lapse_left: u32,
    crossing_time: Option<f64>,
    crashed: bool,
    done: bool,
}

struct DayContext<'a> {
    config: &'a SimConfig,
    network: &'a RoadNetwork,
    population: &'a [DriverProfile],
    routes: &'a [Route],
    habitual: &'a [f64],
}

fn round_to(x: f64, scale: f64) -> f64 {
    (x * scale).round() / scale
}

impl DayContext<'_> {
    fn emit(&self, v: &Vehicle, day: u32, t: f64, out: &mut [Vec<PointRow>]) {
        let (lng, lat) = self.network.edge_lnglat(v.state.edge, v.state.pos);
        out[v.driver].push(PointRow {
            driver_id: self.population[v.driver].id.0,
            trip_id: day,
            day,
            t,
            v: round_to(v.state.speed, 1e3),
            lng: round_to(lng, 1e7),
            lat: round_to(lat, 1e7),
            heading: self.network.edges[v.state.edge].heading,
        });
    }

    fn record(&self, v: &Vehicle, day: u32, t: f64, kind: ViolationKind, lng: f64, lat: f64) -> ViolationRecord {
        ViolationRecord {
            driver: self.population[v.driver].id,
            day,
            t,
            kind,
            lng: round_to(lng, 1e7),
            lat: round_to(lat, 1e7),
        }
    }

    fn simulate(&self, day: u32, day_seed: u64) -> DayOutput {
        let cfg = self.config;
        let net = self.network;
        let n = self.population.len();
        let mut rng = seed::rng(day_seed);
        let epoch = f64::from(day) * SECONDS_PER_DAY;
        let window = cfg.day_end - cfg.day_start;

        let mut vehicles: Vec<Vehicle> = Vec::with_capacity(n);
        let mut departures: Vec<(f64, usize)> = Vec::with_capacity(n);
        for (i, p) in self.population.iter().enumerate() {
            let z_c: f64 = rng.sample(StandardNormal);
            let z_d: f64 = rng.sample(StandardNormal);
            let compliance =
                (p.s_max / cfg.compliance_ref_speed * (1.0 + cfg.compliance_dev * z_c)).max(0.1);
            let offset = (self.habitual[i] + cfg.departure_jitter * z_d)
                .round()
                .clamp(0.0, (window - 1.0).max(0.0));
            departures.push((epoch + cfg.day_start + offset, i));
            let start = VehicleState::start(&self.routes[i]);
            vehicles.push(Vehicle {
                driver: i,
                state: start,
                prev: start,
                compliance,
                committed: None,
                speeding_run: 0,
                speeding_start: (0.0, 0.0, 0.0),
                leader: None,
                leader_gap: f64::INFINITY,
                lapse_left: 0,
                crossing_time: None,
                crashed: false,
                done: false,
            });
        }
        departures.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut tracks: Vec<Vec<PointRow>> = vec![Vec::new(); n];
        let mut violations = Vec::new();
        let mut waiting: Vec<usize> = Vec::new();
        let mut next_dep = 0;
        let mut active: Vec<usize> = Vec::new();
        let mut occupancy: Vec<Vec<usize>> = vec![Vec::new(); net.edges.len()];
        let hard_end = epoch + cfg.day_end + cfg.overrun;
        let mut t = epoch + cfg.day_start;

        loop {
            while next_dep < departures.len() && departures[next_dep].0 <= t {
                waiting.push(departures[next_dep].1);
                next_dep += 1;
            }
            if !waiting.is_empty() {
                self.fill_occupancy(&vehicles, &active, &mut occupancy);
                let approaching = self.approaching_edges(&vehicles, &active);
                let mut still = Vec::new();
                for &i in &waiting {
                    let first = self.routes[i].edges[0];
                    let tail = occupancy[first].first().map(|&j| vehicles[j].state.pos);
                    let room = !approaching[first]
                        && tail.is_none_or(|pos| {
                            pos - cfg.vehicle_length >= self.population[i].g_min + 1.0
                        });
                    if room {
                        occupancy[first].insert(0, i);
                        active.push(i);
                        self.emit(&vehicles[i], day, t, &mut tracks);
                    } else {
                        still.push(i);
                    }
                }
                waiting = still;
                active.sort_unstable();
            }
            if active.is_empty() && waiting.is_empty() && next_dep == departures.len() {
                break;
            }
            if t >= hard_end {
                log::warn!(
                    "day {day}: {} vehicles still driving at the horizon",
                    active.len() + waiting.len()
                );
                break;
            }
            self.step(day, t, &mut rng, &mut vehicles, &mut active, &mut occupancy, &mut tracks, &mut violations);
            t += DT;
        }
        DayOutput { tracks, violations }
    }

    /// Edges that a driving vehicle is about to enter and could not stop
    /// short of; nobody may be inserted at their start.
    fn approaching_edges(&self, vehicles: &[Vehicle], active: &[usize]) -> Vec<bool> {
        let cfg = self.config;
        let mut out = vec![false; self.network.edges.len()];
        for &j in active {
            let v = &vehicles[j];
            let route = &self.routes[j];
            let st = v.state;
            if st.cursor + 1 >= route.edges.len() {
                continue;
            }
            let p = &self.population[j];
            let d = route.lengths[st.cursor] - st.pos;
            let reach = st.speed * p.tau + st.speed * st.speed / (2.0 * p.dec);
            if d < reach + cfg.vehicle_length + p.g_min {
                out[route.edges[st.cursor + 1]] = true;
            }
        }
        out
    }

    fn fill_occupancy(&self, vehicles: &[Vehicle], active: &[usize], occ: &mut [Vec<usize>]) {
        for o in occ.iter_mut() {
            o.clear();
        }
        for &i in active {
            occ[vehicles[i].state.edge].push(i);
        }
        for o in occ.iter_mut().filter(|o| o.len() > 1) {
            o.sort_by(|&a, &b| {
                vehicles[a]
                    .state
                    .pos
                    .total_cmp(&vehicles[b].state.pos)
                    .then(a.cmp(&b))
            });
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step<R: Rng>(
        &self,
        day: u32,
        t: f64,
        rng: &mut R,
        vehicles: &mut [Vehicle],
        active: &mut Vec<usize>,
        occ: &mut [Vec<usize>],
        tracks: &mut [Vec<PointRow>],
        violations: &mut Vec<ViolationRecord>,
    ) {
        let cfg = self.config;
        let net = self.network;
        self.fill_occupancy(vehicles, active, occ);

        // speeds from the current state of everybody
        let mut speeds = Vec::with_capacity(active.len());
        for &i in active.iter() {
            let v = &vehicles[i];
            let p = &self.population[i];
            let route = &self.routes[i];
            let st = v.state;
            let edge = &net.edges[st.edge];
            let len = route.lengths[st.cursor];
            let has_next = st.cursor + 1 < route.edges.len();

            let on_edge = &occ[st.edge];
            let me = on_edge.iter().position(|&j| j == i).expect("vehicle on its edge");
            let mut leader = None;
            let mut safe: Option<f64> = None;
            let mut consider = |s: f64| safe = Some(safe.map_or(s, |c: f64| c.min(s)));
            if let Some(&ahead) = on_edge.get(me + 1) {
                leader = Some((ahead, vehicles[ahead].state.pos - cfg.vehicle_length - st.pos));
            } else if has_next {
                let next = route.edges[st.cursor + 1];
                if let Some(&tail) = occ[next].first() {
                    let gap = len - st.pos + vehicles[tail].state.pos - cfg.vehicle_length;
                    leader = Some((tail, gap));
                }
            }
            let u: f64 = rng.random();
            let lapsed = v.lapse_left > 0 || u < p.sigma * cfg.lapse_rate;
            match leader {
                _ if lapsed => {}
                // Already touching: wait for the leader to pull away.
                Some((_, gap)) if gap <= 0.0 => consider(0.0),
                Some((j, gap)) => consider(krauss_safe_speed(
                    st.speed,
                    vehicles[j].state.speed,
                    (gap - p.g_min).max(0.0),
                    p.dec,
                    p.tau,
                )),
                None => {}
            }

            let mut commit = vehicles[i].committed;
            if has_next {
                if let Some(sig) = net.nodes[edge.to].signal {
                    let d = (len - st.pos).max(0.0);
                    match sig.state(edge.axis, t) {
                        Light::Green => {}
                        _ if commit == Some(st.cursor) => {}
                        _ => {
                            let needed = if st.speed <= 0.0 {
                                0.0
                            } else if d <= 0.0 {
                                f64::INFINITY
                            } else {
                                st.speed * st.speed / (2.0 * d)
                            };
                            if needed <= p.dec {
                                consider(krauss_safe_speed(
                                    st.speed,
                                    0.0,
                                    (d - STOP_LINE_MARGIN_M).max(0.0),
                                    p.dec,
                                    p.tau,
                                ));
                            } else {
                                commit = Some(st.cursor);
                            }
                        }
                    }
                }
            }

            let mut limit = edge.limit * v.compliance;
            if has_next {
                let next_heading = net.edges[route.edges[st.cursor + 1]].heading;
                if next_heading != edge.heading {
                    let vt = cfg.turn_speed * v.compliance;
                    let d = (len - st.pos).max(0.0);
                    let brake = -p.dec + (p.dec * p.dec + vt * vt + 2.0 * p.dec * d).sqrt();
                    limit = limit.min(vt.max(brake));
                }
            }

            let v_des = desired_speed(st.speed, p, limit, safe);
            let r: f64 = rng.random();
            speeds.push((apply_imperfection(v_des, p, r), leader, commit, lapsed));
        }

        // move
        let mut arrived = Vec::new();
        for (k, &i) in active.iter().enumerate() {
            let (speed, leader, commit, lapsed) = speeds[k];
            let v = &mut vehicles[i];
            v.lapse_left = match (lapsed, v.lapse_left) {
                (false, _) => 0,
                (true, 0) => cfg.lapse_duration - 1,
                (true, left) => left - 1,
            };
            v.prev = v.state;
            v.leader = leader.map(|l| l.0);
            v.leader_gap = leader.map_or(f64::INFINITY, |l| l.1);
            v.committed = commit;
            let (next, done) = v.prev.advance(speed, &self.routes[i]);
            v.state = next;
            v.crossing_time = (next.cursor != v.prev.cursor).then(|| {
                let remaining = self.routes[i].lengths[v.prev.cursor] - v.prev.pos;
                t + remaining / speed.max(1e-9)
            });
            if done {
                arrived.push(i);
            }
        }
        for &i in &arrived {
            vehicles[i].done = true;
        }

        // overlaps: rear-end crashes or merge conflicts at nodes
        let still: Vec<usize> = active.iter().copied().filter(|&i| !vehicles[i].done).collect();
        self.fill_occupancy(vehicles, &still, occ);
        let mut crashes: Vec<(usize, usize)> = Vec::new();
        let mut yields: Vec<usize> = Vec::new();
        for lane in occ.iter().filter(|o| o.len() > 1) {
            for w in lane.windows(2) {
                let (behind, ahead) = (w[0], w[1]);
                let gap = vehicles[ahead].state.pos - cfg.vehicle_length - vehicles[behind].state.pos;
                if gap > 0.0 {
                    continue;
                }
                let b_entered = vehicles[behind].crossing_time.is_some();
                let a_entered = vehicles[ahead].crossing_time.is_some();
                let following = vehicles[behind].leader == Some(ahead);
                if following && vehicles[behind].leader_gap <= 0.0 {
                    // The overlap predates this move; no new impact.
                    continue;
                }
                if following || (!b_entered && !a_entered) {
                    crashes.push((behind, ahead));
                } else if b_entered {
                    yields.push(behind);
                } else {
                    yields.push(ahead);
                }
            }
        }
        for &i in &yields {
            let v = &mut vehicles[i];
            let route = &self.routes[i];
            let cursor = v.prev.cursor;
            v.state = VehicleState {
                edge: route.edges[cursor],
                pos: route.lengths[cursor],
                speed: 0.0,
                cursor,
            };
            v.crossing_time = None;
        }

        let now = t + DT;
        for &i in active.iter() {
            let v = &vehicles[i];
            if let Some(tc) = v.crossing_time {
                let from = &net.edges[v.prev.edge];
                if let Some(sig) = net.nodes[from.to].signal {
                    if sig.state(from.axis, tc) == Light::Red {
                        let node = &net.nodes[from.to];
                        let (lng, lat) = net.to_lnglat(node.x, node.y);
                        violations.push(self.record(v, day, now, ViolationKind::LightViolation, lng, lat));
                    }
                }
            }
            let v = &mut vehicles[i];
            if v.crossing_time.is_some() {
                v.committed = None;
            }
            if v.state.speed > net.edges[v.state.edge].limit {
                v.speeding_run += 1;
                if v.speeding_run == 1 {
                    let (lng, lat) = net.edge_lnglat(v.state.edge, v.state.pos);
                    v.speeding_start = (now, lng, lat);
                }
                if v.speeding_run == cfg.speeding_min_duration {
                    let (ts, lng, lat) = v.speeding_start;
                    let rec = self.record(v, day, ts, ViolationKind::Speeding, lng, lat);
                    violations.push(rec);
                }
            } else {
                vehicles[i].speeding_run = 0;
            }
            self.emit(&vehicles[i], day, now, tracks);
        }
        for (behind, ahead) in crashes {
            if vehicles[behind].crashed {
                continue;
            }
            let (lng, lat) = net.edge_lnglat(vehicles[behind].state.edge, vehicles[behind].state.pos);
            violations.push(self.record(&vehicles[behind], day, now, ViolationKind::Collision, lng, lat));
            for j in [behind, ahead] {
                vehicles[j].crashed = true;
                vehicles[j].done = true;
            }
        }
        active.retain(|&i| !vehicles[i].done);
    }
}

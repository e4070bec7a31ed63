use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geo::EARTH_RADIUS_M;

/// Parameters of the synthetic signalized grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cols: usize,
    pub rows: usize,
    /// Edge length, m.
    pub edge_length: f64,
    /// Speed limit on every edge, m/s.
    pub speed_limit: f64,
    /// Signal cycle, s. Each axis gets half the cycle.
    pub cycle: f64,
    pub green: f64,
    pub yellow: f64,
    pub origin_lng: f64,
    pub origin_lat: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cols: 8,
            rows: 8,
            edge_length: 400.0,
            speed_limit: 16.7,
            cycle: 60.0,
            green: 26.0,
            yellow: 4.0,
            origin_lng: 120.10,
            origin_lat: 30.20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    EastWest,
    NorthSouth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Light {
    Green,
    Yellow,
    Red,
}

/// Fixed-time two-phase signal. East-west approaches are served in the first
/// half of the cycle, north-south in the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub cycle: f64,
    pub green: f64,
    pub yellow: f64,
    pub offset: f64,
}

impl Signal {
    pub fn state(&self, axis: Axis, t: f64) -> Light {
        let mut phase = (t + self.offset).rem_euclid(self.cycle);
        if axis == Axis::NorthSouth {
            phase = (phase - self.cycle / 2.0).rem_euclid(self.cycle);
        }
        if phase < self.green {
            Light::Green
        } else if phase < self.green + self.yellow {
            Light::Yellow
        } else {
            Light::Red
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub col: usize,
    pub row: usize,
    /// Local east coordinate, m.
    pub x: f64,
    /// Local north coordinate, m.
    pub y: f64,
    pub signal: Option<Signal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub limit: f64,
    /// Travel direction, degrees clockwise from north.
    pub heading: f64,
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    pub spec: GridSpec,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    by_endpoints: HashMap<(usize, usize), usize>,
    meters_per_deg_lng: f64,
    meters_per_deg_lat: f64,
}

impl RoadNetwork {
    pub fn grid(spec: GridSpec) -> Result<Self, SimError> {
        let bad = |m: &str| Err(SimError::ConfigInvalid(m.to_string()));
        if spec.cols < 2 || spec.rows < 2 {
            return bad("grid needs at least 2x2 nodes");
        }
        if !(spec.edge_length > 0.0) || !(spec.speed_limit > 0.0) {
            return bad("edge length and speed limit must be positive");
        }
        if !(spec.cycle > 0.0) || !(spec.green > 0.0) || !(spec.yellow >= 0.0) {
            return bad("signal cycle and green time must be positive");
        }
        if spec.green + spec.yellow > spec.cycle / 2.0 {
            return bad("green + yellow must fit in half a signal cycle");
        }
        let cycle_secs = spec.cycle.round().max(1.0) as usize;
        let mut nodes = Vec::with_capacity(spec.cols * spec.rows);
        for row in 0..spec.rows {
            for col in 0..spec.cols {
                // staggered offsets so neighbouring signals do not switch together
                let offset = ((col * 7 + row * 13) % cycle_secs) as f64;
                nodes.push(Node {
                    col,
                    row,
                    x: col as f64 * spec.edge_length,
                    y: row as f64 * spec.edge_length,
                    signal: Some(Signal {
                        cycle: spec.cycle,
                        green: spec.green,
                        yellow: spec.yellow,
                        offset,
                    }),
                });
            }
        }
        let mut edges = Vec::new();
        let mut by_endpoints = HashMap::new();
        let idx = |c: usize, r: usize| r * spec.cols + c;
        for row in 0..spec.rows {
            for col in 0..spec.cols {
                let here = idx(col, row);
                let mut link = |to: usize, heading: f64, axis: Axis| {
                    by_endpoints.insert((here, to), edges.len());
                    edges.push(Edge {
                        from: here,
                        to,
                        length: spec.edge_length,
                        limit: spec.speed_limit,
                        heading,
                        axis,
                    });
                };
                if col + 1 < spec.cols {
                    link(idx(col + 1, row), 90.0, Axis::EastWest);
                }
                if col > 0 {
                    link(idx(col - 1, row), 270.0, Axis::EastWest);
                }
                if row + 1 < spec.rows {
                    link(idx(col, row + 1), 0.0, Axis::NorthSouth);
                }
                if row > 0 {
                    link(idx(col, row - 1), 180.0, Axis::NorthSouth);
                }
            }
        }
        let meters_per_deg_lat = EARTH_RADIUS_M.to_radians();
        let meters_per_deg_lng = meters_per_deg_lat * spec.origin_lat.to_radians().cos();
        Ok(Self {
            spec,
            nodes,
            edges,
            by_endpoints,
            meters_per_deg_lng,
            meters_per_deg_lat,
        })
    }

    pub fn node_at(&self, col: usize, row: usize) -> usize {
        row * self.spec.cols + col
    }

    pub fn edge_between(&self, from: usize, to: usize) -> Option<usize> {
        self.by_endpoints.get(&(from, to)).copied()
    }

    /// Manhattan distance between two nodes, m.
    pub fn grid_distance(&self, a: usize, b: usize) -> f64 {
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        (na.x - nb.x).abs() + (na.y - nb.y).abs()
    }

    /// L-shaped route: all horizontal moves first (or vertical first).
    pub fn route(&self, from: usize, to: usize, x_first: bool) -> Vec<usize> {
        let (mut c, mut r) = (self.nodes[from].col, self.nodes[from].row);
        let (tc, tr) = (self.nodes[to].col, self.nodes[to].row);
        let mut path = vec![self.node_at(c, r)];
        let step = |v: usize, t: usize| if v < t { v + 1 } else { v - 1 };
        let legs = if x_first { [true, false] } else { [false, true] };
        for horizontal in legs {
            if horizontal {
                while c != tc {
                    c = step(c, tc);
                    path.push(self.node_at(c, r));
                }
            } else {
                while r != tr {
                    r = step(r, tr);
                    path.push(self.node_at(c, r));
                }
            }
        }
        path.windows(2)
            .map(|w| self.edge_between(w[0], w[1]).expect("grid neighbours are linked"))
            .collect()
    }

    pub fn to_lnglat(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.spec.origin_lng + x / self.meters_per_deg_lng,
            self.spec.origin_lat + y / self.meters_per_deg_lat,
        )
    }

    pub fn to_local(&self, lng: f64, lat: f64) -> (f64, f64) {
        (
            (lng - self.spec.origin_lng) * self.meters_per_deg_lng,
            (lat - self.spec.origin_lat) * self.meters_per_deg_lat,
        )
    }

    /// Local coordinates of a position along an edge.
    pub fn edge_xy(&self, edge: usize, pos: f64) -> (f64, f64) {
        let e = &self.edges[edge];
        let (a, b) = (&self.nodes[e.from], &self.nodes[e.to]);
        let f = pos / e.length;
        (a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)
    }

    pub fn edge_lnglat(&self, edge: usize, pos: f64) -> (f64, f64) {
        let (x, y) = self.edge_xy(edge, pos);
        self.to_lnglat(x, y)
    }

    /// Map a position and travel heading back onto (edge, offset). Returns
    /// `None` when the point is more than 2 m off every grid line.
    pub fn locate(&self, lng: f64, lat: f64, heading: f64) -> Option<(usize, f64)> {
        let (x, y) = self.to_local(lng, lat);
        let l = self.spec.edge_length;
        let cardinal = ((heading / 90.0).round() as i64).rem_euclid(4);
        let (along, across, n_along, n_across) = match cardinal {
            1 | 3 => (x, y, self.spec.cols, self.spec.rows),
            _ => (y, x, self.spec.rows, self.spec.cols),
        };
        let line = (across / l).round();
        if line < 0.0 || line as usize >= n_across || (across - line * l).abs() > 2.0 {
            return None;
        }
        let max_along = (n_along - 1) as f64 * l;
        if along < -2.0 || along > max_along + 2.0 {
            return None;
        }
        let along = along.clamp(0.0, max_along);
        let seg = ((along / l).floor() as usize).min(n_along - 2);
        let line = line as usize;
        let forward = matches!(cardinal, 0 | 1);
        let (a, b) = if forward { (seg, seg + 1) } else { (seg + 1, seg) };
        let (from, to) = match cardinal {
            1 | 3 => (self.node_at(a, line), self.node_at(b, line)),
            _ => (self.node_at(line, a), self.node_at(line, b)),
        };
        let edge = self.edge_between(from, to)?;
        let pos = if forward {
            along - seg as f64 * l
        } else {
            (seg + 1) as f64 * l - along
        };
        Some((edge, pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape_and_headings() {
        let net = RoadNetwork::grid(GridSpec::default()).unwrap();
        assert_eq!(net.nodes.len(), 64);
        // 2 directions * (7*8 horizontal + 8*7 vertical)
        assert_eq!(net.edges.len(), 224);
        let e = net.edge_between(net.node_at(0, 0), net.node_at(1, 0)).unwrap();
        assert_eq!(net.edges[e].heading, 90.0);
        let e = net.edge_between(net.node_at(0, 1), net.node_at(0, 0)).unwrap();
        assert_eq!(net.edges[e].heading, 180.0);
        assert!(net.edges.iter().all(|e| e.length > 0.0));
    }

    #[test]
    fn signal_phases_alternate() {
        let s = Signal {
            cycle: 60.0,
            green: 27.0,
            yellow: 3.0,
            offset: 0.0,
        };
        assert_eq!(s.state(Axis::EastWest, 0.0), Light::Green);
        assert_eq!(s.state(Axis::EastWest, 28.0), Light::Yellow);
        assert_eq!(s.state(Axis::EastWest, 31.0), Light::Red);
        assert_eq!(s.state(Axis::NorthSouth, 0.0), Light::Red);
        assert_eq!(s.state(Axis::NorthSouth, 30.0), Light::Green);
        assert_eq!(s.state(Axis::NorthSouth, 58.5), Light::Yellow);
    }

    #[test]
    fn route_is_connected_manhattan_path() {
        let net = RoadNetwork::grid(GridSpec::default()).unwrap();
        let (a, b) = (net.node_at(1, 6), net.node_at(7, 2));
        for x_first in [true, false] {
            let r = net.route(a, b, x_first);
            assert_eq!(r.len(), 10);
            assert_eq!(net.edges[r[0]].from, a);
            assert_eq!(net.edges[*r.last().unwrap()].to, b);
            for w in r.windows(2) {
                assert_eq!(net.edges[w[0]].to, net.edges[w[1]].from);
            }
        }
    }

    #[test]
    fn locate_inverts_edge_positions() {
        let net = RoadNetwork::grid(GridSpec::default()).unwrap();
        for (i, e) in net.edges.iter().enumerate() {
            for pos in [0.5, 123.4, 399.0] {
                let (lng, lat) = net.edge_lnglat(i, pos);
                let (edge, p) = net.locate(lng, lat, e.heading).unwrap();
                assert_eq!(edge, i);
                assert!((p - pos).abs() < 1e-6);
            }
        }
        assert!(net.locate(120.10 + 0.001, 30.20 + 0.001, 90.0).is_none());
    }

    #[test]
    fn rejects_bad_specs() {
        let s = GridSpec { green: 29.0, yellow: 3.0, ..GridSpec::default() };
        assert!(RoadNetwork::grid(s).is_err());
        let s = GridSpec { edge_length: 0.0, ..GridSpec::default() };
        assert!(RoadNetwork::grid(s).is_err());
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Driver identifier.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct DriverId(pub u32);

impl fmt::Display for DriverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One GPS-like sample. `t` is seconds since the scenario epoch, `v` is m/s,
/// coordinates and heading are degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub v: f64,
    pub lng: f64,
    pub lat: f64,
    pub heading: f64,
    pub driver: DriverId,
    pub trip: u32,
}

/// A chronologically ordered run of points for one driver.
#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub driver: DriverId,
    pub id: u32,
    pub day: u32,
    pub points: Vec<TrajectoryPoint>,
}

impl Trip {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Elapsed time between first and last point, seconds.
    pub fn duration(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Haversine path length over all consecutive points, meters.
    pub fn distance(&self) -> f64 {
        crate::geo::path_length(&self.points)
    }

    /// True when every inter-point spacing is exactly one second.
    pub fn has_unit_spacing(&self) -> bool {
        self.points.windows(2).all(|w| (w[1].t - w[0].t - 1.0).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Speeding,
    #[serde(rename = "light")]
    LightViolation,
    Collision,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 3] = [
        ViolationKind::Speeding,
        ViolationKind::LightViolation,
        ViolationKind::Collision,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Speeding => "speeding",
            ViolationKind::LightViolation => "light",
            ViolationKind::Collision => "collision",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ViolationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "speeding" => Ok(ViolationKind::Speeding),
            "light" => Ok(ViolationKind::LightViolation),
            "collision" => Ok(ViolationKind::Collision),
            other => Err(format!("unknown violation kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub driver: DriverId,
    pub day: u32,
    pub t: f64,
    pub kind: ViolationKind,
    pub lng: f64,
    pub lat: f64,
}

/// Inclusive range of scenario days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayRange {
    pub first: u32,
    pub last: u32,
}

impl DayRange {
    pub fn new(first: u32, last: u32) -> Self {
        Self { first, last }
    }

    pub fn contains(&self, day: u32) -> bool {
        (self.first..=self.last).contains(&day)
    }

    pub fn len(&self) -> u32 {
        self.last.saturating_sub(self.first) + 1
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PeriodError {
    #[error("day range {0}..={1} is empty")]
    Empty(u32, u32),
    #[error("observation period must end before the performance period starts")]
    Overlap,
}

/// Observation days produce features, performance days produce labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSplit {
    pub observation: DayRange,
    pub performance: DayRange,
}

impl PeriodSplit {
    pub fn new(observation: DayRange, performance: DayRange) -> Result<Self, PeriodError> {
        for r in [observation, performance] {
            if r.is_empty() {
                return Err(PeriodError::Empty(r.first, r.last));
            }
        }
        if observation.last >= performance.first {
            return Err(PeriodError::Overlap);
        }
        Ok(Self {
            observation,
            performance,
        })
    }

    /// First half observation, second half performance.
    pub fn halves(days: u32) -> Result<Self, PeriodError> {
        if days < 2 {
            return Err(PeriodError::Empty(0, days.saturating_sub(1)));
        }
        let half = days / 2;
        Self::new(DayRange::new(0, half - 1), DayRange::new(half, days - 1))
    }
}

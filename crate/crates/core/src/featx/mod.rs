//! Per-driver behavior features and good/bad labels.
//!
//! Features come only from observation-period data; labels only from
//! performance-period violation records.

mod accel;
mod events;
mod habits;
mod label;
mod vector;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accel::acceleration_series;
pub use events::{accumulate_event_features, detect_abrupt_events, AbruptEvent, EventKind};
pub use habits::extract_habit_features;
pub use label::{label_driver, Label};
pub use vector::{
    build_feature_vector, extract_population, DriverRow, ExtractOptions, ExtractSummary,
    SpeedingSource, TlnSource, InvalidTrip, feature_matrix,
};

/// Number of features per driver.
pub const N_FEATURES: usize = 23;

/// Column order of the feature matrix.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "AVGT", "AVGS", "MAXA", "AVGA", "MAXD", "AVGD", "MAXV", "AVGV", "ISN", "AAS", "AAT", "AAN",
    "ADS", "ADT", "ADN", "ATS", "ATT", "ATN", "OSS", "OST", "OSN", "TLN", "CON",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("trip needs at least 2 points, got {0}")]
    TooShort(usize),
    #[error("driver has no trips in the observation period")]
    NoTrips,
    #[error("trajectory-only light detection needs a road network")]
    NetworkRequired,
}

/// Thresholds for aggressive-event detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventThresholds {
    /// Abrupt acceleration, m/s².
    pub acc: f64,
    /// Abrupt deceleration magnitude, m/s².
    pub dec: f64,
    /// Minimum speed for an abrupt turn, m/s.
    pub v_star: f64,
    /// Minimum one-step heading change for an abrupt turn, degrees.
    pub ang: f64,
    /// Speed limit used when no road network is available, m/s.
    pub speed_limit: f64,
}

impl Default for EventThresholds {
    fn default() -> Self {
        Self {
            acc: 3.0,
            dec: 3.5,
            v_star: 8.0,
            ang: 30.0,
            speed_limit: 16.7,
        }
    }
}

impl EventThresholds {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.acc, self.dec, self.v_star, self.ang, self.speed_limit];
        if all.iter().any(|x| !(*x > 0.0)) {
            return Err("event thresholds must be positive".into());
        }
        if self.ang > 180.0 {
            return Err("turn angle threshold must be at most 180 degrees".into());
        }
        Ok(())
    }
}

/// The 23 per-driver features over the observation period.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Mean trip duration, s.
    pub avgt: f64,
    /// Mean trip distance, m.
    pub avgs: f64,
    pub maxa: f64,
    /// Mean of positive accelerations.
    pub avga: f64,
    pub maxd: f64,
    /// Mean of deceleration magnitudes.
    pub avgd: f64,
    pub maxv: f64,
    pub avgv: f64,
    /// Intersections crossed.
    pub isn: f64,
    pub aas: f64,
    pub aat: f64,
    pub aan: f64,
    pub ads: f64,
    pub adt: f64,
    pub adn: f64,
    pub ats: f64,
    pub att: f64,
    pub atn: f64,
    pub oss: f64,
    pub ost: f64,
    pub osn: f64,
    pub tln: f64,
    pub con: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.avgt, self.avgs, self.maxa, self.avga, self.maxd, self.avgd, self.maxv,
            self.avgv, self.isn, self.aas, self.aat, self.aan, self.ads, self.adt, self.adn,
            self.ats, self.att, self.atn, self.oss, self.ost, self.osn, self.tln, self.con,
        ]
    }

    pub fn from_array(a: [f64; N_FEATURES]) -> Self {
        Self {
            avgt: a[0],
            avgs: a[1],
            maxa: a[2],
            avga: a[3],
            maxd: a[4],
            avgd: a[5],
            maxv: a[6],
            avgv: a[7],
            isn: a[8],
            aas: a[9],
            aat: a[10],
            aan: a[11],
            ads: a[12],
            adt: a[13],
            adn: a[14],
            ats: a[15],
            att: a[16],
            atn: a[17],
            oss: a[18],
            ost: a[19],
            osn: a[20],
            tln: a[21],
            con: a[22],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.to_array()[i])
    }
}

//! Trajectory and violation file formats.
//!
//! Trajectories are CSV or JSON Lines (chosen by the `.jsonl`/`.ndjson`
//! extension) with columns `driver_id, trip_id, day, t, v, lng, lat, heading`.
//! Violations are CSV with `driver_id, day, t, kind, lng, lat`. Feature
//! matrices are CSV with `driver_id`, one column per feature, then `label`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featx::Label;
use crate::learn::Dataset;
use crate::types::{DriverId, TrajectoryPoint, ViolationKind, ViolationRecord};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl FormatError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// On-disk trajectory row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub driver_id: u32,
    pub trip_id: u32,
    pub day: u32,
    pub t: f64,
    pub v: f64,
    pub lng: f64,
    pub lat: f64,
    pub heading: f64,
}

impl PointRow {
    pub fn point(&self) -> TrajectoryPoint {
        TrajectoryPoint {
            t: self.t,
            v: self.v,
            lng: self.lng,
            lat: self.lat,
            heading: self.heading,
            driver: DriverId(self.driver_id),
            trip: self.trip_id,
        }
    }

    pub fn from_point(p: &TrajectoryPoint, day: u32) -> Self {
        Self {
            driver_id: p.driver.0,
            trip_id: p.trip,
            day,
            t: p.t,
            v: p.v,
            lng: p.lng,
            lat: p.lat,
            heading: p.heading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ViolationRow {
    driver_id: u32,
    day: u32,
    t: f64,
    kind: ViolationKind,
    lng: f64,
    lat: f64,
}

fn is_json_lines(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson")
    )
}

fn open(path: &Path) -> Result<File, FormatError> {
    File::open(path).map_err(|e| FormatError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| FormatError::io(path, e))
}

fn csv_error(path: &Path, err: csv::Error) -> FormatError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => FormatError::io(path, e),
        kind => FormatError::Schema {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(open(path)?));
    rdr.deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

pub fn read_trajectories(path: &Path) -> Result<Vec<PointRow>, FormatError> {
    let rows: Vec<PointRow> = if is_json_lines(path) {
        let mut out = Vec::new();
        for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
            let line = line.map_err(|e| FormatError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line).map_err(|e| FormatError::Schema {
                    path: path.to_path_buf(),
                    line: i as u64 + 1,
                    message: e.to_string(),
                })?,
            );
        }
        out
    } else {
        read_csv(path)?
    };
    Ok(rows)
}

pub fn write_trajectories(path: &Path, rows: &[PointRow]) -> Result<(), FormatError> {
    if is_json_lines(path) {
        let mut w = create(path)?;
        for r in rows {
            let line = serde_json::to_string(r).expect("point rows always serialize");
            writeln!(w, "{line}").map_err(|e| FormatError::io(path, e))?;
        }
        w.flush().map_err(|e| FormatError::io(path, e))
    } else {
        write_csv(path, rows)
    }
}

pub fn read_violations(path: &Path) -> Result<Vec<ViolationRecord>, FormatError> {
    let rows: Vec<ViolationRow> = read_csv(path)?;
    Ok(rows
        .into_iter()
        .map(|r| ViolationRecord {
            driver: DriverId(r.driver_id),
            day: r.day,
            t: r.t,
            kind: r.kind,
            lng: r.lng,
            lat: r.lat,
        })
        .collect())
}

pub fn write_violations(path: &Path, records: &[ViolationRecord]) -> Result<(), FormatError> {
    let rows: Vec<ViolationRow> = records
        .iter()
        .map(|r| ViolationRow {
            driver_id: r.driver.0,
            day: r.day,
            t: r.t,
            kind: r.kind,
            lng: r.lng,
            lat: r.lat,
        })
        .collect();
    write_csv(path, &rows)
}

pub fn write_features(path: &Path, data: &Dataset) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["driver_id".to_string()];
    header.extend(data.feature_names.iter().cloned());
    header.push("label".into());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for ((id, row), label) in data.ids.iter().zip(&data.x).zip(&data.labels) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        rec.push(label_text(*label).into());
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

pub fn label_text(label: Label) -> &'static str {
    match label {
        Label::Good => "good",
        Label::Bad => "bad",
    }
}

pub fn parse_label(text: &str) -> Option<Label> {
    match text {
        "good" => Some(Label::Good),
        "bad" => Some(Label::Bad),
        _ => None,
    }
}

pub fn read_features(path: &Path) -> Result<Dataset, FormatError> {
    let schema = |line: u64, message: String| FormatError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(open(path)?));
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let n = header.len();
    if n < 3 || &header[0] != "driver_id" || &header[n - 1] != "label" {
        return Err(schema(1, "expected driver_id, feature columns, label".into()));
    }
    let names: Vec<String> = header.iter().skip(1).take(n - 2).map(String::from).collect();
    let (mut ids, mut x, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        ids.push(rec[0].parse::<u32>().map_err(|e| schema(line, format!("driver_id: {e}")))?);
        let mut row = Vec::with_capacity(n - 2);
        for (k, name) in names.iter().enumerate() {
            let v: f64 = rec[k + 1].parse().map_err(|e| schema(line, format!("{name}: {e}")))?;
            if !v.is_finite() {
                return Err(schema(line, format!("{name}: not a finite number")));
            }
            row.push(v);
        }
        x.push(row);
        let label = &rec[n - 1];
        labels.push(parse_label(label).ok_or_else(|| schema(line, format!("unknown label {label:?}")))?);
    }
    Dataset::new(names, ids, x, labels).map_err(|e| schema(0, e.to_string()))
}

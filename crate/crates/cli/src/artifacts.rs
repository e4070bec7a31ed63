//! Artifact file names and small writers shared by the subcommands.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const TRAJECTORIES: &str = "trajectories.csv";
pub const VIOLATIONS: &str = "violations.csv";
pub const POPULATION: &str = "population.csv";
pub const MANIFEST: &str = "manifest.json";
pub const FEATURES: &str = "features.csv";
pub const EXTRACT_SUMMARY: &str = "extract_summary.json";
pub const METRICS: &str = "metrics.csv";
pub const SWEEP: &str = "sweep.csv";
pub const MODEL: &str = "model.json";
pub const TRAINING_SET: &str = "training_set.csv";
pub const SCORECARD: &str = "scorecard.json";
pub const SCORES: &str = "scores.csv";
pub const REPORT: &str = "report.csv";
pub const TOP_N: &str = "top_n.csv";
pub const REPORT_SUMMARY: &str = "report_summary.json";

/// Fail with an I/O error naming `dir` unless it is an existing directory.
pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    match fs::metadata(dir) {
        Ok(m) if m.is_dir() => Ok(()),
        Ok(_) => Err(CliError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        )),
        Err(e) => Err(CliError::io(dir, e)),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts always serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

/// Serialize `rows` as CSV with a header from the row type.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Write an explicit header, needed when `rows` may be empty.
pub fn write_csv_with_header<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: &[T],
) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    w.write_record(header).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::invalid(format!("{}: {other:?}", path.display())),
    }
}

/// Read a CSV of serde rows; malformed rows are validation errors with the
/// line number.
pub fn read_csv<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let mut out = Vec::new();
    for r in rdr.deserialize() {
        out.push(r.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            match e.into_kind() {
                csv::ErrorKind::Io(io) => CliError::io(path, io),
                other => CliError::invalid(format!("{}:{line}: {other:?}", path.display())),
            }
        })?);
    }
    Ok(out)
}

//! Result tables and JSON records. Numbers are checked for finiteness before
//! anything is written; a non-finite cell is a failure.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Config;
use crate::Failure;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMING_FILE: &str = "timing.json";
pub const ERROR_FILE: &str = "error.json";
pub const PLOT_FILE: &str = "plot_data.csv";

/// One line of `results.csv`; the column order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub t: f64,
    pub rho: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub theory: f64,
    pub ratio: f64,
    pub method: String,
    pub replicates: u64,
    pub seed: u64,
}

impl Row {
    fn numbers(&self) -> [(&'static str, f64); 7] {
        [
            ("t", self.t),
            ("rho", self.rho),
            ("p_hat", self.p_hat),
            ("ci_low", self.ci_low),
            ("ci_high", self.ci_high),
            ("theory", self.theory),
            ("ratio", self.ratio),
        ]
    }
}

/// Everything an experiment reports besides its rows.
#[derive(Debug, Default)]
pub struct Report {
    pub rows: Vec<Row>,
    /// Experiment-specific diagnostics, keyed by row or check.
    pub diagnostics: Vec<Value>,
    pub warnings: Vec<String>,
}

pub fn check_rows(rows: &[Row]) -> Result<(), Failure> {
    for (i, row) in rows.iter().enumerate() {
        for (name, x) in row.numbers() {
            if !x.is_finite() {
                return Err(Failure::NonFinite(format!("row {i} ({}) column {name} = {x}", row.method)));
            }
        }
    }
    Ok(())
}

/// `serde_json` writes non-finite floats as `null`, so a summary must
/// contain no nulls at all; optional fields are skipped instead.
fn check_value(v: &Value, path: &str) -> Result<(), Failure> {
    match v {
        Value::Null => Err(Failure::NonFinite(format!("summary field {path} is null or non-finite"))),
        Value::Array(items) => items.iter().enumerate().try_for_each(|(i, x)| check_value(x, &format!("{path}[{i}]"))),
        Value::Object(map) => map.iter().try_for_each(|(k, x)| check_value(x, &format!("{path}.{k}"))),
        _ => Ok(()),
    }
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if rows.is_empty() {
        w.write_record(HEADER).map_err(io)?;
    }
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Io(e.to_string()))
}

pub const HEADER: [&str; 11] =
    ["experiment", "t", "rho", "p_hat", "ci_low", "ci_high", "theory", "ratio", "method", "replicates", "seed"];

pub fn read_rows(path: &Path) -> Result<Vec<Row>, Failure> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| Failure::Parse(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(Failure::Parse(format!("unexpected header in {}", path.display())));
    }
    let rows = r
        .deserialize()
        .collect::<Result<Vec<Row>, _>>()
        .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    check_rows(&rows).map_err(|e| Failure::Parse(e.to_string()))?;
    Ok(rows)
}

fn io(e: csv::Error) -> Failure {
    Failure::Io(e.to_string())
}

/// Writes `results.csv` and `summary.json`. Both depend only on the
/// resolved configuration, so reruns reproduce them byte for byte.
pub fn write_run(dir: &Path, config: &Config, report: &Report) -> Result<(), Failure> {
    check_rows(&report.rows)?;
    let summary = serde_json::json!({
        "experiment": config.experiment.name(),
        "config": config,
        "versions": {
            "telecom-lde": env!("CARGO_PKG_VERSION"),
            "telecom-core": telecom_core::VERSION,
        },
        "rows": report.rows.len(),
        "warnings": report.warnings,
        "diagnostics": report.diagnostics,
    });
    check_value(&summary, "summary")?;
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    write_rows(&dir.join(RESULTS_FILE), &report.rows)?;
    write_json(&dir.join(SUMMARY_FILE), &summary)
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

//! CSV and JSON output. Floats are written in shortest round-trip form so a
//! read-back reproduces every value exactly.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::pipeline::{Estimate, LearningRow, SweepAxis, SweepRow};

pub const RESULTS_HEADER: [&str; 11] = [
    "scheme",
    "axis_name",
    "axis_value",
    "sum_rate_mean",
    "sum_rate_se",
    "min_sinr_db_mean",
    "min_sinr_db_se",
    "ber_mean",
    "ber_se",
    "trials",
    "seed",
];

pub const LEARNING_HEADER: [&str; 6] = ["scheme", "iteration", "cost_mean", "cost_se", "trials", "seed"];

fn float(v: f64) -> String {
    format!("{v}")
}

fn parse_float(field: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| Error::ConfigParse { line: 0, message: format!("bad {field} value `{value}`") })
}

fn parse_int<I: std::str::FromStr>(field: &str, value: &str) -> Result<I> {
    value.parse().map_err(|_| Error::ConfigParse { line: 0, message: format!("bad {field} value `{value}`") })
}

/// Writes the results table (header row even when empty).
pub fn write_results_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        let (ber_mean, ber_se) = r.ber.map_or((String::new(), String::new()), |b| (float(b.mean), float(b.se)));
        w.write_record([
            r.scheme.clone(),
            r.axis_name.clone(),
            float(r.axis_value),
            float(r.sum_rate.mean),
            float(r.sum_rate.se),
            float(r.min_sinr_db.mean),
            float(r.min_sinr_db.se),
            ber_mean,
            ber_se,
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RESULTS_HEADER {
        return Err(Error::ConfigParse { line: 1, message: format!("unexpected header {header:?}") });
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record?;
        let est = |i: usize, name: &str| -> Result<Estimate> {
            Ok(Estimate { mean: parse_float(name, &rec[i])?, se: parse_float(name, &rec[i + 1])? })
        };
        let ber = if rec[7].is_empty() { None } else { Some(est(7, "ber")?) };
        rows.push(SweepRow {
            scheme: rec[0].to_string(),
            axis_name: rec[1].to_string(),
            axis_value: parse_float("axis_value", &rec[2])?,
            sum_rate: est(3, "sum_rate")?,
            min_sinr_db: est(5, "min_sinr_db")?,
            ber,
            trials: parse_int("trials", &rec[9])?,
            seed: parse_int("seed", &rec[10])?,
        });
    }
    Ok(rows)
}

pub fn write_learning_csv(rows: &[LearningRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LEARNING_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.iteration.to_string(),
            float(r.cost.mean),
            float(r.cost.se),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to regenerate an output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a> {
    pub preset: Option<&'a str>,
    pub kind: &'a str,
    pub schemes: Vec<String>,
    pub axis: &'a SweepAxis,
    pub trials: usize,
    pub seed: u64,
    pub ber: bool,
    pub config: &'a SystemConfig,
}

/// `results.csv` -> `results.config.json`.
pub fn sidecar_path(out: impl AsRef<Path>) -> PathBuf {
    out.as_ref().with_extension("config.json")
}

pub fn write_manifest(manifest: &RunManifest<'_>, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes the results CSV plus its sidecar config JSON; returns the sidecar path.
pub fn emit_results(rows: &[SweepRow], manifest: &RunManifest<'_>, path: impl AsRef<Path>) -> Result<PathBuf> {
    write_results_csv(rows, &path)?;
    let sidecar = sidecar_path(&path);
    write_manifest(manifest, &sidecar)?;
    Ok(sidecar)
}

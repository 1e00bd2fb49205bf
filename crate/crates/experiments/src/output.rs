//! Result files. Every CSV starts with one `#` line naming the schema
//! version, the kind of table, the config fingerprint and the seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{ExpError, Result};
use crate::methods::PhaseFile;
use crate::overhead::OverheadRow;
use crate::run::{OptimizeOutcome, SweepRow, Validation};

pub const SCHEMA_VERSION: u32 = 1;

pub fn header(kind: &str, config: &ExperimentConfig) -> String {
    format!(
        "# irs-experiments schema={SCHEMA_VERSION} kind={kind} name={} fingerprint={} seed={}\n",
        config.name,
        config.fingerprint(),
        config.monte_carlo.seed
    )
}

pub fn csv_string<R: Serialize>(header: &str, rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| ExpError::Config(format!("CSV encoding: {e}")))?;
    }
    let body = w.into_inner().map_err(|e| ExpError::Config(format!("CSV encoding: {e}")))?;
    Ok(format!("{header}{}", String::from_utf8(body).expect("CSV is UTF-8")))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| ExpError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| ExpError::io(&path, e))?;
    Ok(path)
}

pub fn write_sweep(dir: &Path, config: &ExperimentConfig, rows: &[SweepRow]) -> Result<PathBuf> {
    write(dir, "sweep.csv", &csv_string(&header("sweep", config), rows)?)
}

pub fn write_validation(dir: &Path, config: &ExperimentConfig, v: &Validation) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write(dir, "validate_cdf.csv", &csv_string(&header("validate_cdf", config), &v.cdf)?)?,
        write(dir, "validate_ks.csv", &csv_string(&header("validate_ks", config), &v.ks)?)?,
    ])
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    best_value: f64,
}

pub fn write_optimize(dir: &Path, config: &ExperimentConfig, outcome: &OptimizeOutcome) -> Result<Vec<PathBuf>> {
    let trace: Vec<TraceRow> = outcome
        .result
        .trace
        .iter()
        .enumerate()
        .map(|(iteration, &best_value)| TraceRow { iteration, best_value })
        .collect();
    let report = toml::to_string(&outcome.report).expect("report serializes");
    Ok(vec![
        write(dir, "phases.toml", &PhaseFile::new(&outcome.phases).to_toml())?,
        write(dir, "trace.csv", &csv_string(&header("trace", config), &trace)?)?,
        write(dir, "report.toml", &report)?,
    ])
}

pub fn write_overhead(dir: &Path, config: &ExperimentConfig, rows: &[OverheadRow]) -> Result<PathBuf> {
    write(dir, "overhead.csv", &csv_string(&header("overhead", config), rows)?)
}

//! CSV persistence of sweep rows and the run manifest written beside them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Method;
use crate::shots::ShotMode;

use super::config::ExperimentConfig;
use super::sweep::{SweepResult, SweepRow};

pub const HEADER: [&str; 13] = [
    "case",
    "method",
    "K_requested",
    "K_actual",
    "M",
    "trial",
    "seed",
    "estimate",
    "exact",
    "abs_error",
    "error_rate",
    "flag",
    "wall_time_s",
];

/// Shortest round-trip scientific notation.
pub fn format_real(x: f64) -> String {
    format!("{x:e}")
}

fn record(row: &SweepRow) -> [String; 13] {
    [
        row.case.to_string(),
        row.method.to_string(),
        row.k_requested.to_string(),
        row.k_actual.to_string(),
        row.shots.to_string(),
        row.trial.to_string(),
        row.seed.to_string(),
        format_real(row.estimate),
        format_real(row.exact),
        format_real(row.abs_error),
        format_real(row.error_rate),
        row.flag.clone(),
        format!("{:.6}", row.wall_time_s),
    ]
}

pub fn write_rows<W: std::io::Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Run metadata stored as `<csv>.manifest.toml`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: String,
    pub config_digest: String,
    pub config: ExperimentConfig,
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    csv.with_file_name(name)
}

/// Writes the CSV and its manifest, creating parent directories.
pub fn write_sweep(path: &Path, config: &ExperimentConfig, result: &SweepResult) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_rows(fs::File::create(path)?, &result.rows)?;
    let manifest = RunManifest {
        version: result.version.clone(),
        config_digest: result.config_digest.clone(),
        config: config.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(manifest_path(path), text)?;
    Ok(())
}

pub fn read_manifest(csv: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(manifest_path(csv))?;
    let m: RunManifest = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    m.config.validate()?;
    Ok(m)
}

/// Fields of one CSV row needed to recompute it.
#[derive(Debug, Clone, PartialEq)]
pub struct RowKey {
    pub method: Method,
    pub k_requested: usize,
    pub shots: ShotMode,
    pub trial: usize,
    pub seed: u64,
    pub estimate: String,
}

/// Reads data row `index` (1-based, header excluded).
pub fn read_row(csv_path: &Path, index: usize) -> Result<RowKey> {
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Config("CSV header does not match the sweep schema".into()));
    }
    let rec = rdr
        .records()
        .nth(index.checked_sub(1).ok_or_else(|| Error::Config("rows are numbered from 1".into()))?)
        .ok_or_else(|| Error::Config(format!("row {index} not found")))??;
    let field = |i: usize| rec.get(i).unwrap_or_default();
    let bad = |what: &str| Error::Config(format!("row {index}: bad {what}"));
    Ok(RowKey {
        method: field(1).parse()?,
        k_requested: field(2).parse().map_err(|_| bad("K_requested"))?,
        shots: field(4).parse()?,
        trial: field(5).parse().map_err(|_| bad("trial"))?,
        seed: field(6).parse().map_err(|_| bad("seed"))?,
        estimate: field(7).to_string(),
    })
}

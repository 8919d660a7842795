//! On-disk formats. JSON documents carry `format_version` and
//! `tool_version` fields; CSV tables start with `#` comment lines holding
//! the same plus a one-line JSON echo of the config, followed by a header
//! row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use vqint_core::experiment::ExperimentConfig;

use crate::config::{CliError, FORMAT_VERSION, TOOL_VERSION};

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let file = File::open(path).map_err(|e| CliError::config(path.display().to_string(), format!("cannot open: {e}")))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::config(path.display().to_string(), e.to_string()))
}

/// Comment lines written above every table.
pub fn preamble(cfg: &ExperimentConfig) -> Vec<String> {
    let echo = serde_json::to_string(cfg).expect("config serializes");
    vec![format!("vqint {TOOL_VERSION} format {FORMAT_VERSION}"), format!("config {echo}")]
}

pub fn write_table(path: &Path, comments: &[String], header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::io(path, e);
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    for c in comments {
        writeln!(out, "# {c}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

/// Comment lines (without `# `) and records of a table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>), CliError> {
    let io = |e: std::io::Error| CliError::io(path, e);
    let file = File::open(path).map_err(io)?;
    let comments = BufReader::new(file)
        .lines()
        .map_while(|l| l.ok())
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim_start().to_string())
        .collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(false).from_path(path).map_err(|e| CliError::io(path, e.into()))?;
    let records = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| CliError::io(path, e.into()))?;
    Ok((comments, records))
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

//! Result tables as CSV or as JSON with a metadata block.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_secs: f64,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub failures: serde_json::Value,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile<T> {
    pub metadata: Metadata,
    pub rows: Vec<T>,
}

fn emit_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Emit(e.to_string())
}

/// CSV rows in struct field order under `columns`, written even when empty.
pub fn write_csv<T: Serialize, W: std::io::Write>(rows: &[T], columns: &[&str], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(columns).map_err(emit_err)?;
    for row in rows {
        w.serialize(row).map_err(emit_err)?;
    }
    w.flush().map_err(emit_err)
}

pub fn write_json<T: Serialize, W: std::io::Write>(rows: &[T], metadata: &Metadata, out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        metadata: &'a Metadata,
        rows: &'a [T],
    }
    serde_json::to_writer_pretty(out, &Borrowed { metadata, rows }).map_err(emit_err)
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit_results<T: Serialize>(
    rows: &[T],
    columns: &[&str],
    path: Option<&Path>,
    format: OutputFormat,
    metadata: &Metadata,
) -> Result<()> {
    let sink: Box<dyn std::io::Write> = match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| {
            BenchError::Emit(format!("{}: {e}", p.display()))
        })?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        OutputFormat::Csv => write_csv(rows, columns, sink),
        OutputFormat::Json => {
            let mut sink = sink;
            write_json(rows, metadata, &mut sink)?;
            writeln!(sink).map_err(emit_err)
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<ResultFile<T>> {
    let text = std::fs::read_to_string(path).map_err(emit_err)?;
    serde_json::from_str(&text).map_err(emit_err)
}

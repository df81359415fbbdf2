//! Numeric CSV ingestion.
//!
//! An optional first row `t:<t_1>,<t_2>,...` gives the sampling points;
//! without it the grid is taken as `m` equispaced midpoints. Blank lines are
//! skipped. Every error carries the 1-based line and column.

use std::path::{Path, PathBuf};

use fda_hybrid::{FunctionalDataset, Grid};
use nalgebra::DMatrix;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layout {
    /// Column 1 is the response, columns `2..=m+1` the curve values.
    ResponseFirst,
    /// The ingested file holds only curves; responses live in `responses`,
    /// one per line.
    TwoFile { responses: PathBuf },
}

struct Table {
    header: Option<(usize, Vec<f64>)>,
    /// `(line, values)`
    rows: Vec<(usize, Vec<f64>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::ingest(path, 0, 0, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            BenchError::ingest(path, line, 0, e.to_string())
        })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let mut fields: Vec<&str> = rec.iter().collect();
        let is_header = k == 0 && fields[0].starts_with("t:");
        if is_header {
            fields[0] = fields[0].trim_start_matches("t:").trim();
        }
        let values = fields
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| BenchError::ingest(path, line, c + 1, format!("not a finite number: '{f}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if is_header {
            header = Some((line, values));
        } else {
            rows.push((line, values));
        }
    }
    Ok(Table { header, rows })
}

fn check_width(path: &Path, rows: &[(usize, Vec<f64>)], width: usize) -> Result<()> {
    for (line, row) in rows {
        if row.len() != width {
            return Err(BenchError::ingest(
                path,
                *line,
                row.len().min(width) + 1,
                format!("expected {width} fields, found {}", row.len()),
            ));
        }
    }
    Ok(())
}

fn build_grid(path: &Path, header: Option<(usize, Vec<f64>)>, m: usize) -> Result<Grid> {
    match header {
        None => Grid::midpoints(m).map_err(|e| BenchError::ingest(path, 0, 0, e.to_string())),
        Some((line, pts)) => {
            if pts.len() != m {
                return Err(BenchError::ingest(
                    path,
                    line,
                    1,
                    format!("header lists {} points but rows carry {m} curve values", pts.len()),
                ));
            }
            Grid::from_points(pts).map_err(|e| BenchError::ingest(path, line, 1, e.to_string()))
        }
    }
}

pub fn ingest_csv(path: &Path, layout: &Layout) -> Result<FunctionalDataset> {
    let table = read_table(path)?;
    let Some((_, first)) = table.rows.first() else {
        return Err(BenchError::ingest(path, 0, 0, "no data rows"));
    };
    let (y, x, m) = match layout {
        Layout::ResponseFirst => {
            let width = first.len();
            if width < 3 {
                return Err(BenchError::ingest(
                    path,
                    table.rows[0].0,
                    width + 1,
                    "need a response and at least two curve values",
                ));
            }
            check_width(path, &table.rows, width)?;
            let y: Vec<f64> = table.rows.iter().map(|(_, r)| r[0]).collect();
            let x = DMatrix::from_fn(table.rows.len(), width - 1, |i, p| table.rows[i].1[p + 1]);
            (y, x, width - 1)
        }
        Layout::TwoFile { responses } => {
            let width = first.len();
            if width < 2 {
                return Err(BenchError::ingest(path, table.rows[0].0, 2, "need at least two curve values"));
            }
            check_width(path, &table.rows, width)?;
            let resp = read_table(responses)?;
            if let Some((line, _)) = resp.header {
                return Err(BenchError::ingest(responses, line, 1, "response file takes no grid header"));
            }
            check_width(responses, &resp.rows, 1)?;
            if resp.rows.len() != table.rows.len() {
                return Err(BenchError::ingest(
                    responses,
                    0,
                    0,
                    format!("{} responses for {} curves", resp.rows.len(), table.rows.len()),
                ));
            }
            let y = resp.rows.iter().map(|(_, r)| r[0]).collect();
            let x = DMatrix::from_fn(table.rows.len(), width, |i, p| table.rows[i].1[p]);
            (y, x, width)
        }
    };
    if y.len() < 2 {
        return Err(BenchError::ingest(path, 0, 0, format!("need at least 2 observations, found {}", y.len())));
    }
    let grid = build_grid(path, table.header, m)?;
    FunctionalDataset::from_matrix(grid, y, x).map_err(|e| BenchError::ingest(path, 0, 0, e.to_string()))
}

/// Writes `data` in the response-first layout with a `t:` header.
pub fn write_dataset<W: std::io::Write>(data: &FunctionalDataset, out: W) -> Result<()> {
    let emit = |e: csv::Error| BenchError::Emit(e.to_string());
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header: Vec<String> = data.grid().points().iter().map(|t| t.to_string()).collect();
    header[0] = format!("t:{}", header[0]);
    w.write_record(&header).map_err(emit)?;
    for i in 0..data.n() {
        let mut rec = vec![data.y()[i].to_string()];
        rec.extend(data.x().row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(emit)?;
    }
    w.flush().map_err(|e| BenchError::Emit(e.to_string()))
}

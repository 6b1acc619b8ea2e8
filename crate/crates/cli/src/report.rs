//! Report emission: CSV with a fixed column order, JSON mirroring the result
//! types, and plot data as `# series <name>` blocks of `x y` lines.
//!
//! Floats use Rust's shortest round-trip formatting, so equal values give
//! equal bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Plotdata,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Plotdata => "dat",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(v) => v.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map(Cell::F).unwrap_or_else(|| Cell::S(String::new()))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

/// One curve of `(x, y)` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Everything a command produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// File stem of the outputs.
    pub stem: String,
    pub table: Table,
    pub json: serde_json::Value,
    pub series: Vec<Series>,
    /// Aggregate verdict when the command asserts checks.
    pub passed: Option<bool>,
}

/// Shortest round-trip decimal; exponent form for very large or small magnitudes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn render_csv(table: &Table) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let bad = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(&table.columns).map_err(bad)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(bad)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn render_plotdata(series: &[Series]) -> String {
    let mut out = String::new();
    for (i, s) in series.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# series {}", s.name);
        for (x, y) in &s.points {
            let _ = writeln!(out, "{} {}", fmt_f64(*x), fmt_f64(*y));
        }
    }
    out
}

pub fn render(report: &Report, format: Format) -> CliResult<String> {
    match format {
        Format::Csv => render_csv(&report.table),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).expect("json value serializes");
            s.push('\n');
            Ok(s)
        }
        Format::Plotdata => Ok(render_plotdata(&report.series)),
    }
}

/// Write `report` in `format` to `path` (parents are created).
pub fn write_report(report: &Report, format: Format, path: &Path) -> CliResult<PathBuf> {
    let body = render(report, format)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

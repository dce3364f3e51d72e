//! Experiment specs and results, and their CSV/JSON renderings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

/// One table cell. Non-finite floats are stored as `Null` so that JSON
/// output parses back to the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Bool(bool),
    UInt(u64),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn float(x: f64) -> Self {
        if x.is_finite() {
            Cell::Float(x)
        } else {
            Cell::Null
        }
    }

    pub fn opt_float(x: Option<f64>) -> Self {
        x.map_or(Cell::Null, Cell::float)
    }

    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(x) => Some(x),
            Cell::UInt(x) => Some(x as f64),
            Cell::Int(x) => Some(x as f64),
            _ => None,
        }
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::UInt(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::UInt(x as u64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::float(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Null, Into::into)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Null => Ok(()),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::UInt(x) => write!(f, "{x}"),
            Cell::Int(x) => write!(f, "{x}"),
            // Shortest representation that parses back to the same f64.
            Cell::Float(x) => write!(f, "{x:?}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub command: String,
    pub seed: u64,
    pub params: BTreeMap<String, Cell>,
    pub format: Format,
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub version: String,
    pub spec: ExperimentSpec,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// `false` when a verification inside the run failed.
    pub passed: bool,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    /// Value of `column` in row `row`.
    pub fn get(&self, row: usize, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.get(row)?.get(c)
    }

    /// Run parameters that are not already columns, appended in key order
    /// so every CSV record carries the full spec.
    fn echo_columns(&self) -> Vec<(&String, &Cell)> {
        self.spec.params.iter().filter(|(k, _)| !self.columns.contains(k)).collect()
    }

    /// CSV with a header line. Wall time is left out so that reruns are
    /// byte-identical.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let echo = self.echo_columns();
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> =
            self.columns.iter().map(String::as_str).chain(echo.iter().map(|(k, _)| k.as_str())).collect();
        w.write_record(&header)?;
        for row in &self.rows {
            let fields: Vec<String> = row.iter().chain(echo.iter().map(|(_, v)| *v)).map(Cell::to_string).collect();
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        let mut out = out;
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out).map_err(serde_json::Error::io)
    }
}

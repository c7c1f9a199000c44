//! CSV tables with a JSON metadata sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::cache::write_atomic;
use super::PersistError;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

fn render(c: &Cell, out: &mut String) {
    match c {
        // shortest representation that parses back to the same bits
        Cell::Num(x) => write!(out, "{x:?}").expect("string write"),
        Cell::Int(i) => write!(out, "{i}").expect("string write"),
        Cell::Text(s) if s.contains([',', '"', '\n']) => write!(out, "\"{}\"", s.replace('"', "\"\"")).expect("string write"),
        Cell::Text(s) => out.push_str(s),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(c, &mut out);
            }
            out.push('\n');
        }
        out
    }
}

/// Provenance attached to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Meta {
    pub fn new(command: &str, config_hash: u64, seed: u64) -> Self {
        Meta {
            command: command.into(),
            config_hash: format!("{config_hash:016x}"),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Writes `name.csv` and `name.json`; the sidecar holds `meta`, the column
/// names and `extra`.
pub fn write_table(dir: &Path, name: &str, table: &Table, meta: &Meta, extra: Value) -> Result<PathBuf, PersistError> {
    let csv = dir.join(format!("{name}.csv"));
    write_atomic(&csv, table.to_csv().as_bytes())?;
    let sidecar = json!({
        "meta": meta,
        "columns": table.header,
        "rows": table.rows.len(),
        "data": extra,
    });
    write_json(dir, name, &sidecar)?;
    Ok(csv)
}

/// Writes `name.json`.
pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, PersistError> {
    let path = dir.join(format!("{name}.json"));
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

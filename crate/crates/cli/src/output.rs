//! Tabular results rendered as CSV or JSON, and the run manifest.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    List(Vec<String>),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Self::Empty, Self::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

/// Round to 12 decimals; `-0` becomes `0`.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let v: f64 = format!("{x:.12}").parse().unwrap_or(x);
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn num_text(x: f64) -> String {
    if x.is_finite() {
        format!("{}", round12(x))
    } else {
        format!("{x}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Num(x) => num_text(*x),
            Self::Int(i) => i.to_string(),
            Self::Text(s) => s.clone(),
            Self::Bool(b) => b.to_string(),
            Self::List(items) => items.join(";"),
            Self::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Num(x) => serde_json::Number::from_f64(round12(*x)).map_or(Value::Null, Value::Number),
            Self::Int(i) => Value::from(*i),
            Self::Text(s) => Value::from(s.clone()),
            Self::Bool(b) => Value::from(*b),
            Self::List(items) => Value::from(items.clone()),
            Self::Empty => Value::Null,
        }
    }
}

/// Named columns; a `single` table renders as one JSON object.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub single: bool,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
            single: false,
        }
    }

    pub fn record(pairs: Vec<(&str, Cell)>) -> Self {
        let (columns, row): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).unzip();
        Self {
            columns,
            rows: vec![row],
            single: true,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        let object = |row: &Vec<Cell>| {
            let mut map = Map::new();
            for (k, v) in self.columns.iter().zip(row) {
                map.insert(k.clone(), v.json());
            }
            Value::Object(map)
        };
        if self.single && self.rows.len() == 1 {
            object(&self.rows[0])
        } else {
            Value::Array(self.rows.iter().map(object).collect())
        }
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, std::io::Error> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.to_json())?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.into_inner().map_err(|e| e.into_error())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub config: Value,
    pub output: Option<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, config: &RunConfig) -> Self {
        let canonical = config.canonical_json();
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            library_version: phasenoise::VERSION,
            subcommand: subcommand.to_owned(),
            seed: config.seed,
            config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
            config: serde_json::from_str(&canonical).expect("canonical config is JSON"),
            output: config.output.as_ref().map(|p| p.display().to_string()),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")
    }
}

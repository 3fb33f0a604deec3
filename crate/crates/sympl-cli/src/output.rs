//! Tables, JSON documents, and deterministic rendering of both.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::{CliError, Format};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Float(f64),
    Int(i64),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl Cell {
    /// 17 significant digits, so every float round-trips.
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Float(x) => x.to_string(),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Usage(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = self
                        .header
                        .iter()
                        .zip(r)
                        .map(|(k, c)| (k.to_string(), c.json()))
                        .collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

/// What a subcommand produced, before formatting.
#[derive(Debug)]
pub enum Output {
    Table(Table),
    /// A table plus a summary, e.g. a fitted slope.
    TableWithSummary(Table, Value),
    /// A JSON document, optionally with a table for `--format csv`.
    Document(Value, Option<Table>),
}

/// Formatted output: the main text and an optional side document.
#[derive(Debug)]
pub struct Rendered {
    pub main: String,
    pub side: Option<String>,
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn render(out: Output, format: Option<Format>) -> Result<Rendered, CliError> {
    match out {
        Output::Table(t) => match format.unwrap_or(Format::Csv) {
            Format::Csv => Ok(Rendered {
                main: t.to_csv()?,
                side: None,
            }),
            Format::Json => Ok(Rendered {
                main: pretty(&t.to_json()),
                side: None,
            }),
        },
        Output::TableWithSummary(t, s) => match format.unwrap_or(Format::Csv) {
            Format::Csv => Ok(Rendered {
                main: t.to_csv()?,
                side: Some(pretty(&s)),
            }),
            Format::Json => {
                let mut m = Map::new();
                m.insert("rows".into(), t.to_json());
                m.insert("summary".into(), s);
                Ok(Rendered {
                    main: pretty(&Value::Object(m)),
                    side: None,
                })
            }
        },
        Output::Document(v, table) => match (format.unwrap_or(Format::Json), table) {
            (Format::Json, _) => Ok(Rendered {
                main: pretty(&v),
                side: None,
            }),
            (Format::Csv, Some(t)) => Ok(Rendered {
                main: t.to_csv()?,
                side: None,
            }),
            (Format::Csv, None) => Err(CliError::Usage("this subcommand only emits JSON".into())),
        },
    }
}

/// `results.csv` → `results.summary.json`.
pub fn side_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Usage(format!("{}: {e}", path.display()));
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Write to `out` (and its side file), or to stdout with the side document
/// on stderr.
pub fn write(r: &Rendered, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => {
            write_atomic(p, &r.main)?;
            if let Some(s) = &r.side {
                write_atomic(&side_path(p), s)?;
            }
        }
        None => {
            std::io::stdout()
                .write_all(r.main.as_bytes())
                .map_err(|e| CliError::Usage(format!("stdout: {e}")))?;
            if let Some(s) = &r.side {
                eprint!("{s}");
            }
        }
    }
    Ok(())
}

//! File emission: comment-headed CSV or self-describing JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use annuli::numeric::format_real;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA: &str = "annuli/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One CSV cell. Reals carry 17 significant digits.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    fn csv(self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_real(v),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // Non-finite reals become null.
            Cell::Real(v) => json!(v),
        }
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Writes `table` to `path`. CSV files open with `# ` lines holding the
/// version and the run config; JSON files carry both as fields.
pub fn write_table<C: Serialize>(path: &Path, format: Format, config: &C, table: &Table) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => {
            writeln!(w, "# annuli {VERSION}")?;
            writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
            writeln!(w, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|c| c.csv()).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            let rows: Vec<Vec<Value>> = table
                .rows
                .iter()
                .map(|r| r.iter().map(|c| c.json()).collect())
                .collect();
            let doc = json!({
                "schema": SCHEMA,
                "version": VERSION,
                "config": config,
                "columns": table.columns,
                "rows": rows,
            });
            serde_json::to_writer(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Compact JSON on stdout, `schema` included.
pub fn print_summary<B: Serialize>(body: &B) -> io::Result<()> {
    let mut v = serde_json::to_value(body)?;
    if let Value::Object(map) = &mut v {
        map.insert("schema".into(), json!(SCHEMA));
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer(&mut out, &v)?;
    writeln!(out)
}

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Result table of one experiment, plus free-form notes and the names of
/// any invariant that failed.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub notes: Vec<String>,
    pub failures: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn check(&mut self, ok: bool, invariant: &str, detail: impl FnOnce() -> String) {
        if !ok {
            self.failures.push((invariant.to_string(), detail()));
        }
    }
}

/// JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

fn field(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn render(table: &Table, config: &Value, format: Format) -> Result<Vec<u8>> {
    let version = env!("CARGO_PKG_VERSION");
    let mut buf = Vec::new();
    match format {
        Format::Csv => {
            writeln!(buf, "# lpcomp {version}")?;
            writeln!(buf, "# config: {config}")?;
            for n in &table.notes {
                writeln!(buf, "# {n}")?;
            }
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(field))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> =
                        table.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect();
                    Value::Object(m)
                })
                .collect();
            let doc = json!({ "version": version, "config": config, "notes": table.notes, "rows": rows });
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

pub fn emit(bytes: &[u8], output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

//! Tables with a provenance header, written as CSV or JSON.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Table {
    pub schema: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(schema: &'static str, columns: &[&str]) -> Self {
        Self { schema, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        let generated = if cfg.deterministic() {
            None
        } else {
            Some(SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
        };
        match cfg.format() {
            Format::Csv => {
                let mut out = format!("# schema={} ducc={VERSION}\n", self.schema);
                out += &format!("# config {}\n", serde_json::to_string(cfg).unwrap_or_default());
                if let Some(ts) = generated {
                    out += &format!("# generated_unix={ts}\n");
                }
                out += &self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(cell).collect();
                    out += &cells.join(",");
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
                    .collect();
                let mut doc = json!({ "schema": self.schema, "version": VERSION, "config": cfg, "rows": rows });
                if let Some(ts) = generated {
                    doc["generated_unix"] = json!(ts);
                }
                serde_json::to_string_pretty(&doc).unwrap_or_default() + "\n"
            }
        }
    }

    pub fn emit(&self, cfg: &RunConfig) -> Result<(), CliError> {
        let text = self.render(cfg);
        match &cfg.output {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

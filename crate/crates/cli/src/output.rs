//! File emission. Every file starts with the artifact version and config hash.

use std::fs;
use std::io;
use std::path::PathBuf;

use nuloss_core::table::{Cell, Table};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig};

pub struct Emitter {
    dir: PathBuf,
    format: OutputFormat,
    version: &'static str,
    config_hash: String,
}

impl Emitter {
    pub fn new(config: &RunConfig) -> io::Result<Emitter> {
        let dir = PathBuf::from(&config.output.dir);
        fs::create_dir_all(&dir)?;
        Ok(Emitter { dir, format: config.output.format, version: env!("CARGO_PKG_VERSION"), config_hash: config.hash() })
    }

    fn header(&self) -> String {
        format!("nuloss {} config sha256:{}", self.version, self.config_hash)
    }

    fn artifact(&self) -> Value {
        json!({ "config_sha256": self.config_hash, "version": self.version })
    }

    /// Writes `stem.csv` or `stem.json` depending on the configured format.
    pub fn table(&self, stem: &str, table: &Table) -> io::Result<PathBuf> {
        match self.format {
            OutputFormat::Csv => self.write(&format!("{stem}.csv"), &table.to_csv(Some(&self.header()))),
            OutputFormat::Json => {
                let rows: Vec<Value> = table.rows.iter().map(|r| Value::Array(r.iter().map(cell_value).collect())).collect();
                let doc = json!({ "artifact": self.artifact(), "columns": table.columns, "rows": rows });
                self.write(&format!("{stem}.json"), &pretty(&doc)?)
            }
        }
    }

    /// JSON documents ignore the configured format.
    pub fn document(&self, stem: &str, data: &impl Serialize) -> io::Result<PathBuf> {
        let data = serde_json::to_value(data).map_err(io::Error::other)?;
        let doc = json!({ "artifact": self.artifact(), "data": data });
        self.write(&format!("{stem}.json"), &pretty(&doc)?)
    }

    fn write(&self, name: &str, contents: &str) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }
}

// serde_json's default map is ordered by key, so the output is stable.
fn pretty(v: &Value) -> io::Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(io::Error::other)?;
    s.push('\n');
    Ok(s)
}

fn cell_value(c: &Cell) -> Value {
    match c {
        Cell::Int(i) => json!(i),
        Cell::Real(v) if v.is_finite() => json!(v),
        Cell::Real(v) => json!(nuloss_core::table::format_real(*v)),
        Cell::Text(s) => json!(s),
    }
}

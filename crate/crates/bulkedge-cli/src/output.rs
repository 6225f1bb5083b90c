//! Writing tables with their provenance header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::commands::Table;
use crate::config::{Format, RunConfig};

/// Column documentation shipped with the binary.
pub const SCHEMA: &str = include_str!("../schema.json");

/// Git blob hash (SHA-256 object format) of the schema file.
pub fn schema_hash() -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", SCHEMA.len()).as_bytes());
    h.update(SCHEMA.as_bytes());
    hex::encode(h.finalize())
}

pub fn schema_version() -> u64 {
    let v: Value = serde_json::from_str(SCHEMA).expect("shipped schema is valid JSON");
    v["version"].as_u64().expect("schema has a version")
}

/// Columns declared for a subcommand in the schema.
pub fn schema_columns(subcommand: &str) -> Vec<String> {
    let v: Value = serde_json::from_str(SCHEMA).expect("shipped schema is valid JSON");
    v["subcommands"][subcommand]["columns"]
        .as_array()
        .map(|cols| cols.iter().filter_map(|c| c["name"].as_str().map(String::from)).collect())
        .unwrap_or_default()
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn write(cfg: &RunConfig, table: &Table, out_dir: &Path) -> std::io::Result<PathBuf> {
    assert_eq!(table.columns, schema_columns(cfg.subcommand.name()), "columns drifted from schema.json");
    fs::create_dir_all(out_dir)?;
    let ext = match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = out_dir.join(format!("{}_{}.{ext}", cfg.subcommand.name(), cfg.hash()));
    let config = serde_json::to_value(cfg).expect("config serializes");
    match cfg.format {
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Object(table.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect::<Map<_, _>>()))
                .collect();
            let doc = json!({
                "subcommand": cfg.subcommand.name(),
                "schema_version": schema_version(),
                "schema_hash": schema_hash(),
                "config_hash": cfg.hash(),
                "config": config,
                "columns": table.columns,
                "rows": rows,
                "diagnostics": Value::Object(table.diagnostics.iter().cloned().collect()),
                "warnings": table.warnings,
            });
            fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        }
        Format::Csv => {
            let mut f = fs::File::create(&path)?;
            writeln!(f, "# bulkedge {} schema_version={} schema_hash={}", cfg.subcommand.name(), schema_version(), schema_hash())?;
            writeln!(f, "# config_hash={}", cfg.hash())?;
            writeln!(f, "# config={config}")?;
            for (k, v) in &table.diagnostics {
                writeln!(f, "# diagnostic {k}={v}")?;
            }
            for w in &table.warnings {
                writeln!(f, "# warning {w}")?;
            }
            let mut wtr = csv::Writer::from_writer(f);
            wtr.write_record(&table.columns)?;
            for r in &table.rows {
                wtr.write_record(r.iter().map(cell))?;
            }
            wtr.flush()?;
        }
    }
    Ok(path)
}

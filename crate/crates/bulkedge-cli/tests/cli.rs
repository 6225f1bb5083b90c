use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bulkedge(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bulkedge")).arg("--out").arg(out).args(args).output().unwrap()
}

fn written(o: &Output) -> PathBuf {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    PathBuf::from(String::from_utf8(o.stdout.clone()).unwrap().trim())
}

/// Comment lines and the parsed CSV body.
fn read_csv(path: &Path) -> (Vec<String>, Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let comments: Vec<String> = text.lines().filter(|l| l.starts_with('#')).map(String::from).collect();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (comments, header, rows)
}

fn schema() -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_bulkedge")).args(["oracle", "--print-schema"]).output().unwrap();
    assert!(out.status.success());
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema_columns(subcommand: &str) -> Vec<String> {
    schema()["subcommands"][subcommand]["columns"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect()
}

#[test]
fn oracle_without_flux_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let o = bulkedge(dir.path(), &["oracle", "--set", "model.flux={\"p\":0,\"q\":1}", "--set", "model.geometry.Lx=4", "--set", "model.geometry.Ly=4"]);
    let (_, header, rows) = read_csv(&written(&o));
    assert_eq!(header, schema_columns("oracle"));
    assert_eq!(rows.len(), 1);
    let chern = header.iter().position(|c| c == "chern").unwrap();
    assert_eq!(rows[0][chern], "0");
}

#[test]
fn oracle_lowest_band_at_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let (_, header, rows) = read_csv(&written(&bulkedge(dir.path(), &["oracle"])));
    let chern = header.iter().position(|c| c == "chern").unwrap();
    let got: Vec<&str> = rows.iter().map(|r| r[chern].as_str()).collect();
    // One and two filled bands of the three-band spectrum, then the full band.
    assert_eq!(got, ["1", "-1", "0"]);
}

#[test]
fn bulk_gap_conductance_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bulkedge(dir.path(), &["bulk", "--workers", "1"]);
    let (comments, header, rows) = read_csv(&written(&o));
    assert_eq!(header, schema_columns("bulk"));
    assert!(comments.iter().any(|c| c.starts_with("# config=")));
    let sigma = header.iter().position(|c| c == "sigma_hall").unwrap();
    let v: f64 = rows[0][sigma].parse().unwrap();
    assert!((v - 1.0).abs() < 0.02, "{v}");
}

#[test]
fn unknown_key_exits_with_usage_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = bulkedge(&out, &["bulk", "--set", "model.flux.typo=3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("typo"));
    assert!(!out.exists());
}

#[test]
fn unreadable_config_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bulkedge(dir.path(), &["bulk", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn json_output_embeds_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"model": {"geometry": {"Lx": 12, "Ly": 12}}, "E_grid": [2.5, 2.7]}"#).unwrap();
    let o = bulkedge(dir.path(), &["bulk", "--config", cfg.to_str().unwrap(), "--format", "json", "--workers", "1"]);
    let path = written(&o);
    assert_eq!(path.extension().unwrap(), "json");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["subcommand"], "bulk");
    assert_eq!(doc["config"]["model"]["geometry"]["Lx"], 12);
    assert_eq!(doc["config"]["E_grid"], serde_json::json!([2.5, 2.7]));
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
    let cols: Vec<String> = doc["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().to_string()).collect();
    assert_eq!(cols, schema_columns("bulk"));
    assert_eq!(doc["schema_version"], schema()["version"]);
    // The file name carries the config hash.
    let hash = doc["config_hash"].as_str().unwrap();
    assert!(path.file_name().unwrap().to_str().unwrap().contains(hash));
}

#[test]
fn same_config_same_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["oracle", "--set", "bz_grid=8"];
    let a = written(&bulkedge(dir.path(), &args));
    let first = std::fs::read(&a).unwrap();
    let b = written(&bulkedge(dir.path(), &args));
    assert_eq!(a, b);
    assert_eq!(first, std::fs::read(&b).unwrap());
}

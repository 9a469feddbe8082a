#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use floodxai::synthetic::{kerala_like, write_csv};
use serde_json::Value;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_floodxai"))
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn ok(args: &[&str], cwd: &Path) -> String {
    let out = run(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}: {}",
        out.status.code(),
        stderr(&out)
    );
    stdout(&out)
}

/// Synthetic monsoon-shaped table written as `rain.csv` in `dir`.
pub fn write_synthetic(dir: &Path, n_years: usize) -> PathBuf {
    let data = kerala_like(1901, n_years, 11);
    let path = dir.join("rain.csv");
    let file = std::fs::File::create(&path).unwrap();
    write_csv(&data, file).unwrap();
    path
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

pub fn validate(report: &Value, schema_name: &str) {
    let text = std::fs::read_to_string(schema_dir().join(format!("{schema_name}.schema.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(report) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "report does not match {schema_name}: {msgs:#?}");
}

/// The report with its run timestamps removed.
pub fn without_timestamps(mut report: Value) -> Value {
    if let Some(m) = report.get_mut("manifest").and_then(Value::as_object_mut) {
        m.remove("timestamps");
    }
    report
}

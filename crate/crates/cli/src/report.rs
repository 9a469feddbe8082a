use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Version of the JSON report layout; bumped with the files in `schemas/`.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub path: String,
    /// SHA-256 over the parsed records, before imputation.
    pub fingerprint: String,
    pub records: usize,
    pub label_column: String,
    pub impute: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Seeds {
    pub split: Option<u64>,
    pub explainer: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelRef {
    pub path: String,
    pub kind: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timestamps {
    pub started: String,
    pub finished: String,
}

/// Everything needed to rerun a command. Two runs whose manifests agree
/// outside `timestamps` emit byte-identical reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub dataset: DatasetInfo,
    pub seeds: Seeds,
    pub train_fraction: Option<f64>,
    pub hyperparameters: Value,
    pub explainer: Value,
    pub models: Vec<ModelRef>,
    pub timestamps: Timestamps,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, dataset: DatasetInfo, started: String) -> Self {
        Self {
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            dataset,
            seeds: Seeds::default(),
            train_fraction: None,
            hyperparameters: Value::Null,
            explainer: Value::Null,
            models: Vec::new(),
            timestamps: Timestamps {
                finished: started.clone(),
                started,
            },
        }
    }

    pub fn finish(&mut self) {
        self.timestamps.finished = now();
    }
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub schema_version: u32,
    pub report: &'static str,
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(report: &'static str, manifest: RunManifest, body: T) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            report,
            manifest,
            body,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| CliError::runtime(format!("cannot serialise report: {e}")))
    }
}

/// A file staged in its target directory, moved into place by [`commit`].
pub struct Staged {
    file: tempfile::NamedTempFile,
    target: PathBuf,
}

pub fn stage(target: &Path, contents: &[u8]) -> CliResult<Staged> {
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::runtime(format!("cannot write {}: {e}", target.display()));
    let mut file = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    file.write_all(contents).map_err(fail)?;
    file.as_file().sync_all().map_err(fail)?;
    Ok(Staged {
        file,
        target: target.to_path_buf(),
    })
}

/// Rename every staged file into place. Staging all outputs first means a
/// failed command leaves no report behind.
pub fn commit(staged: Vec<Staged>) -> CliResult<()> {
    for s in staged {
        let target = s.target;
        s.file
            .persist(&target)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {}", target.display(), e.error)))?;
    }
    Ok(())
}

/// Standard output handling: JSON or text to stdout, optional JSON file and
/// SVG chart written atomically.
pub struct Emit<'a> {
    pub json: bool,
    pub out: Option<&'a Path>,
    pub svg: Option<&'a Path>,
}

impl Emit<'_> {
    /// `extra` holds further staged files committed together with the report.
    pub fn emit<T: Serialize>(
        &self,
        report: &Report<T>,
        text: &str,
        svg: Option<String>,
        extra: Vec<Staged>,
    ) -> CliResult<()> {
        let json = report.to_json()?;
        let mut staged = extra;
        if let Some(path) = self.out {
            staged.push(stage(path, json.as_bytes())?);
        }
        if let Some(path) = self.svg {
            match svg {
                Some(svg) => staged.push(stage(path, svg.as_bytes())?),
                None => log::warn!("this report has no chart; --svg ignored"),
            }
        }
        commit(staged)?;
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        let printed = if self.json { json.as_str() } else { text };
        lock.write_all(printed.as_bytes())
            .and_then(|_| lock.flush())
            .map_err(|e| CliError::runtime(format!("cannot write to stdout: {e}")))
    }
}

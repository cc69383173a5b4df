use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "ppm", "pgm", "pnm", "csv"];

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Invariant(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Invariant(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "{e:#}"),
            Failure::Invariant(e) => write!(f, "invariant violation: {e:#}"),
        }
    }
}

impl From<topofeat::Error> for Failure {
    fn from(e: topofeat::Error) -> Self {
        Failure::Input(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

/// Image files in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))? {
        let path = entry?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if path.is_file() && known {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// `features.csv` -> `features.<suffix>`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text)
}

#[derive(Clone, Debug, Serialize)]
pub struct FileError {
    pub file: String,
    pub error: String,
}

/// Record of one command run. Everything except `elapsed_ms` is
/// deterministic.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config: RunConfig,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub errors: Vec<FileError>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub notes: serde_json::Value,
    pub elapsed_ms: u128,
}

pub struct Recorder {
    started: Instant,
    pub manifest: RunManifest,
}

impl Recorder {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                command: command.into(),
                inputs: Vec::new(),
                config: config.clone(),
                seed: config.seed,
                outputs: Vec::new(),
                errors: Vec::new(),
                notes: serde_json::Value::Null,
                elapsed_ms: 0,
            },
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.manifest.inputs.push(p.display().to_string());
    }

    pub fn output(&mut self, p: &Path) {
        self.manifest.outputs.push(p.display().to_string());
    }

    pub fn error(&mut self, file: &Path, err: &anyhow::Error) {
        self.manifest.errors.push(FileError { file: file.display().to_string(), error: format!("{err:#}") });
    }

    /// Writes the manifest and turns recorded per-file errors into a failure.
    pub fn finish(mut self, path: &Path) -> Result<(), Failure> {
        self.manifest.elapsed_ms = self.started.elapsed().as_millis();
        write_json(path, &self.manifest)?;
        if self.manifest.errors.is_empty() {
            return Ok(());
        }
        for e in &self.manifest.errors {
            eprintln!("error: {}: {}", e.file, e.error);
        }
        Err(Failure::Input(anyhow::anyhow!(
            "{} of {} inputs failed",
            self.manifest.errors.len(),
            self.manifest.inputs.len()
        )))
    }
}

//! Output directory with a content-hash manifest, and the run report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Every file written through this goes into the manifest.
pub struct OutputDir {
    root: PathBuf,
    manifest: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), manifest: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.manifest.retain(|m| m.file != name);
        self.manifest.push(ManifestEntry {
            file: name.to_string(),
            bytes: contents.len(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn manifest(&self) -> &[ManifestEntry] {
        &self.manifest
    }
}

/// Contents of `report.json`. The manifest covers every other file of the
/// run; the report cannot hash itself.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub result: Value,
    pub failure: Option<String>,
    pub files: Vec<ManifestEntry>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunReport {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.clone(),
            timings: BTreeMap::new(),
            result: Value::Null,
            failure: None,
            files: Vec::new(),
        }
    }

    pub fn finish(mut self, out: &mut OutputDir) -> Result<PathBuf, CliError> {
        self.files = out.manifest().to_vec();
        out.write_json("report.json", &self)
    }
}

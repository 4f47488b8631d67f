use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::failure::{CmdResult, InputContext};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Resolved invocation written beside every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub argv: Vec<String>,
    pub inputs: Vec<PathBuf>,
    /// Every flag after defaults were applied.
    pub parameters: Value,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: &impl Serialize, output_dir: &Path) -> CmdResult<Self> {
        fs::create_dir_all(output_dir).input(format!("cannot create {}", output_dir.display()))?;
        Ok(Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            argv: std::env::args().collect(),
            inputs: Vec::new(),
            parameters: serde_json::to_value(parameters).input("cannot record parameters")?,
            seeds: Vec::new(),
            output_dir: output_dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes `name` into the output directory and records it.
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> CmdResult<PathBuf> {
        let path = self.output_dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).input(format!("cannot create {}", parent.display()))?;
        }
        fs::write(&path, bytes).input(format!("cannot write {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn finish(self) -> CmdResult<()> {
        let path = self.output_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).input("cannot encode manifest")?;
        fs::write(&path, text + "\n").input(format!("cannot write {}", path.display()))
    }
}

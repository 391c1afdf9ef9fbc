//! Run manifests and staged output writing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "pagexplain";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Resolved parameters, including defaults and environment overrides.
    pub command: Command,
    pub seeds: BTreeMap<String, u64>,
    /// Path to sha256 of every input read.
    pub inputs: BTreeMap<String, String>,
    /// Path to sha256 of every output written, excluding the manifest.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Core(e.into()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest JSON") + "\n"
    }
}

/// Inputs read and outputs produced by one command, kept in memory until the
/// whole command has succeeded.
#[derive(Debug, Default)]
pub struct Run {
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<(PathBuf, Vec<u8>)>,
    pub seeds: BTreeMap<String, u64>,
}

impl Run {
    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| CliError::file(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> CliResult<String> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{}: not valid UTF-8", path.display())))
    }

    pub fn emit(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.outputs.push((path, bytes.into()));
    }

    pub fn manifest(&self, command: &Command) -> RunManifest {
        RunManifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.clone(),
            seeds: self.seeds.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.iter().map(|(p, b)| (p.display().to_string(), sha256_hex(b))).collect(),
        }
    }

    /// Writes every output and the manifest; each file goes through a
    /// temporary sibling and a rename.
    pub fn commit(self, command: &Command, manifest_path: &Path) -> CliResult<RunManifest> {
        let manifest = self.manifest(command);
        for (path, bytes) in &self.outputs {
            write_atomic(path, bytes)?;
        }
        write_atomic(manifest_path, manifest.to_json().as_bytes())?;
        Ok(manifest)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::file(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::file(path, e))
}

/// `path` with `suffix` appended to the full file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

//! Run manifests: every output artifact is written together with a JSON
//! snapshot of the resolved configuration, the seeds and the input file
//! hashes, sufficient to reproduce the run exactly.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    /// The fully resolved configuration of the run; feed it back through
    /// `--config` to reproduce the outputs.
    pub config: Value,
    pub inputs: Vec<InputHash>,
}

impl RunManifest {
    pub fn new<C: Serialize>(subcommand: &str, config: &C, input_paths: &[&Path]) -> Result<Self> {
        let mut inputs = Vec::new();
        for path in input_paths {
            inputs.push(InputHash {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            });
        }
        Ok(RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config)?,
            inputs,
        })
    }

    /// `<output>.manifest.json` next to the artifact it describes.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    pub fn write_for(&self, output: &Path) -> Result<()> {
        let path = Self::path_for(output);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Loads a `--config` file: either a bare configuration object or a run
/// manifest (whose `config` field is then used).
pub fn load_config_value(path: &Path) -> Result<Value> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(inner) = value.get("config") {
        if value.get("tool_version").is_some() {
            return Ok(inner.clone());
        }
    }
    Ok(value)
}

//! Run manifest: the resolved configuration, input digests, seed, tool
//! version and stage timings of one command, serialized as JSON next to the
//! outputs. Re-running a command with the manifest's configuration on the
//! same inputs reproduces the binary artifacts bitwise on the same platform.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliResult;

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Stage {
    name: String,
    seconds: f64,
}

#[derive(Serialize)]
pub struct RunManifest {
    command: String,
    tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    config: BTreeMap<String, serde_json::Value>,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    stages: Vec<Stage>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            config: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            stages: Vec::new(),
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn knob(&mut self, key: &str, value: impl Into<serde_json::Value>) -> &mut Self {
        self.config.insert(key.to_string(), value.into());
        self
    }

    /// Records an input file together with its SHA-256 digest.
    pub fn input(&mut self, path: &Path) -> CliResult<&mut Self> {
        let bytes = std::fs::read(path).map_err(infomax::Error::Io)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher
            .finalize()
            .iter()
            .map(|b| format!("{:02x}", b))
            .collect::<String>();
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: digest });
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn stage(&mut self, name: &str, seconds: f64) -> &mut Self {
        self.stages.push(Stage { name: name.to_string(), seconds });
        self
    }

    /// Writes the manifest atomically as pretty JSON.
    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        infomax::io::write_atomic(path, &bytes)?;
        Ok(())
    }
}

/// Manifest path for an output file: `<file>.manifest.json` beside it.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

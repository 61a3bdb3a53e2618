//! Run manifests: enough metadata to reproduce any output artifact exactly.
//! Reports embed their manifest as a `manifest` field; CSV artifacts get a
//! `<name>.manifest.json` sidecar. Manifests carry no timestamps, so
//! re-running an invocation reproduces them byte for byte.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::errors::CliResult;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, seed: Option<u64>) -> Self {
        Self {
            tool: "debias",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            args: std::env::args().skip(1).collect(),
            seed,
            inputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let sha256: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    pub fn to_json(&self) -> CliResult<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }

    /// Pretty JSON for a sidecar manifest file.
    pub fn to_sidecar_string(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub kind: String,
    pub config_sha256: String,
    pub root_seed: u64,
    pub code_version: String,
    pub module_versions: BTreeMap<String, String>,
    pub workers: usize,
    pub solver: serde_json::Value,
    pub files: Vec<OutputFile>,
    pub wall_clock_ms: u128,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

pub fn module_versions() -> BTreeMap<String, String> {
    let v = env!("CARGO_PKG_VERSION");
    [
        "model",
        "discretization",
        "spectral",
        "covering",
        "msa",
        "observables",
        "qucp",
        "experiments",
    ]
    .iter()
    .map(|m| (m.to_string(), v.to_string()))
    .collect()
}

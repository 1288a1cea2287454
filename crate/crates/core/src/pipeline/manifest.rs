use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::store::write_atomic;
use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<u32>,
    pub config_hash: String,
    pub wall_clock_ms: u64,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
}

/// Record of every stage run into one output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub deterministic: bool,
    /// SHA-256 of each ingested input file, by role.
    pub dataset_fingerprints: BTreeMap<String, String>,
    /// Keyed by stage name plus target.
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config_hash: String, seed: u64, deterministic: bool) -> Self {
        RunManifest {
            artifact_version: ARTIFACT_VERSION.to_owned(),
            config_hash,
            seed,
            deterministic,
            dataset_fingerprints: BTreeMap::new(),
            stages: BTreeMap::new(),
        }
    }

    pub fn load(out: &Path) -> Result<Option<Self>> {
        let path = out.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::parse(&path, e.line(), e.to_string()))
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&out.join(MANIFEST_FILE), text.as_bytes())
    }

    pub fn record(&mut self, record: StageRecord) {
        let key = match record.target {
            Some(t) => format!("{}:{t}:{}", record.stage, &record.config_hash[..8]),
            None => record.stage.clone(),
        };
        self.stages.insert(key, record);
    }

    pub fn outputs(&self) -> impl Iterator<Item = &str> {
        self.stages
            .values()
            .flat_map(|s| s.outputs.iter().map(String::as_str))
    }
}

pub fn fingerprint(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Provenance record written next to simulation outputs. Everything except
/// `wall_clock_ms` is a function of the config, seeds and version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the raw config bytes.
    pub config_hash: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub version: String,
    pub command: String,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_clock_ms: u64,
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

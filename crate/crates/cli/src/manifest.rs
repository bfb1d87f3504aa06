//! Run manifests: the resolved configuration of a run, a hash over its
//! deterministic content, and hashes of every artifact it wrote.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL: &str = "dynrmt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    /// SHA-256 over tool, version, command and config.
    pub manifest_hash: String,
    /// File name to SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    /// Informational only; excluded from the hash and from artifacts.
    pub wall_clock_seconds: f64,
}

#[derive(Serialize)]
struct HashedPart<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: &'a RunConfig,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let version = env!("CARGO_PKG_VERSION");
        let part = HashedPart {
            tool: TOOL,
            version,
            command,
            config,
        };
        let manifest_hash = sha256_hex(&serde_json::to_vec(&part).expect("config serializes"));
        Self {
            tool: TOOL.into(),
            version: version.into(),
            command: command.into(),
            config: config.clone(),
            seed: config.seed,
            manifest_hash,
            artifacts: BTreeMap::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid manifest {}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_wall_clock_and_tracks_config() {
        let cfg = RunConfig::default();
        let mut a = RunManifest::new("density", &cfg);
        let b = RunManifest::new("density", &cfg);
        a.wall_clock_seconds = 12.0;
        assert_eq!(a.manifest_hash, b.manifest_hash);
        let other = RunConfig { seed: 2, ..cfg.clone() };
        assert_ne!(RunManifest::new("density", &other).manifest_hash, b.manifest_hash);
        assert_ne!(RunManifest::new("deloc", &cfg).manifest_hash, b.manifest_hash);
    }
}

//! The run manifest written beside every experiment report: what went in,
//! byte for byte, so identical manifests certify reproducible outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use triage_lab_core::corpus::DatasetPaths;
use triage_lab_core::lupin::ExperimentConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Digest of the fully resolved experiment configuration.
    pub config_hash: String,
    /// Every dataset file that fed the run, with its content digest.
    pub datasets: Vec<DatasetDigest>,
    pub seeds: Vec<u64>,
    pub version: String,
    /// Wall-clock milliseconds; informational, varies between runs.
    pub duration_ms: u64,
}

impl RunManifest {
    pub fn new(
        config: &ExperimentConfig,
        paths: &DatasetPaths,
        duration_ms: u64,
    ) -> Result<Self, CliError> {
        let files = [&paths.reports, &paths.commits, &paths.code, &paths.identities];
        let datasets = files
            .into_iter()
            .map(|path| {
                Ok(DatasetDigest {
                    path: path.display().to_string(),
                    sha256: file_digest(path)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(RunManifest {
            config_hash: config_digest(config),
            datasets,
            seeds: config.seeds.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_ms,
        })
    }

}

pub fn config_digest(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    hex_digest(canonical.as_bytes())
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|err| CliError::Data(format!("{}: {err}", path.display())))?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

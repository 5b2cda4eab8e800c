//! `manifest.json`: everything needed to reproduce a run.

use std::path::Path;

use rru_core::harness::{EnsembleSummary, Verdict};
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub test: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// RFC 3339, UTC. The only fields that differ between identical reruns.
    pub started: String,
    pub finished: String,
    pub verdicts: Vec<TestVerdict>,
    pub files: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        hash: &str,
        summary: &EnsembleSummary,
        started: String,
        finished: String,
        dir: &Path,
        files: &[String],
    ) -> Result<Self, LabError> {
        let files = files
            .iter()
            .map(|name| {
                let path = dir.join(name);
                let bytes = std::fs::read(&path).map_err(|source| LabError::Io { path, source })?;
                Ok(OutputFile { name: name.clone(), sha256: sha256_hex(&bytes) })
            })
            .collect::<Result<_, LabError>>()?;
        Ok(Self {
            tool: String::from("rru"),
            tool_version: String::from(env!("CARGO_PKG_VERSION")),
            command: String::from(command),
            config_hash: String::from(hash),
            seed: summary.seed,
            started,
            finished,
            verdicts: summary
                .outcomes
                .iter()
                .map(|o| TestVerdict { test: String::from(o.test.name()), verdict: o.verdict })
                .collect(),
            files,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<(), LabError> {
        let path = dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| LabError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|source| LabError::Io { path, source })
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

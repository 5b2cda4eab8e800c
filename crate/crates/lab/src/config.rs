//! Reading, overriding, canonicalizing and hashing experiment configs.

use std::path::Path;

use rru_core::harness::{ConfigError, Experiment, ExperimentConfig};
use sha2::{Digest, Sha256};

use crate::LabError;

/// Command-line overrides, applied before validation and hashing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub dense_prefix: Option<u64>,
}

impl Overrides {
    /// `replicates` applies to the urn ensemble and to the embedded runs.
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(r) = self.replicates {
            config.run.replicates = r;
            if let Some(e) = config.embedding.as_mut() {
                e.replicates = r;
            }
        }
        if let Some(d) = self.dense_prefix {
            config.run.dense_prefix = Some(d);
        }
    }
}

/// A validated experiment with its canonical text and hash.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub experiment: Experiment,
    pub canonical: String,
    pub hash: String,
}

/// Deserializes config text; errors carry the offending key path.
pub fn parse_str(text: &str) -> Result<ExperimentConfig, LabError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        LabError::Config(ConfigError::new(if path == "." { String::from("<root>") } else { path }, message))
    })
}

/// TOML with every table's keys sorted.
pub fn canonical_text(config: &ExperimentConfig) -> Result<String, LabError> {
    // toml::Table is a BTreeMap, so converting through Value sorts keys.
    let value = toml::Value::try_from(config).map_err(|e| LabError::Internal(e.to_string()))?;
    toml::to_string(&value).map_err(|e| LabError::Internal(e.to_string()))
}

/// Hex SHA-256 of `text`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_str(text: &str, overrides: &Overrides) -> Result<Loaded, LabError> {
    let mut config = parse_str(text)?;
    overrides.apply(&mut config);
    let experiment = config.validate().map_err(LabError::Config)?;
    let canonical = canonical_text(&experiment.config)?;
    let hash = sha256_hex(canonical.as_bytes());
    Ok(Loaded { experiment, canonical, hash })
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Loaded, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Io { path: path.to_path_buf(), source: e })?;
    load_str(&text, overrides)
}

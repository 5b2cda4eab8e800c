//! Experiment runner for `rru-core`: TOML configs, parallel ensembles,
//! CSV/JSON/text reports and run manifests. The `rru` binary is a thin
//! command-line front end over [`run_experiment`] and friends.

pub mod config;
pub mod manifest;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

use rru_core::enumerate::{enumerate_exact, EnumerationError, EnumerationLimits, ExactLaw};
use rru_core::harness::{ConfigError, EnsembleSummary};
use rru_core::skorokhod::SkorokhodError;
use rru_core::trajectory::TrajectoryError;

pub use config::{load, load_str, Loaded, Overrides};
pub use manifest::RunManifest;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "RRU_OUTPUT_ROOT";

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error at {0}")]
    Config(ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("simulation failed: {0}")]
    Trajectory(TrajectoryError),
    #[error("embedding failed: {0}")]
    Embedding(SkorokhodError),
    #[error("enumeration refused: {0}")]
    Enumeration(EnumerationError),
    #[error("{0}")]
    Internal(String),
}

impl LabError {
    /// Process exit status: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// `dir` if given, else `$RRU_OUTPUT_ROOT/<name>`, else `rru-out/<name>`.
pub fn output_dir(dir: Option<&Path>, name: &str) -> PathBuf {
    match dir {
        Some(d) => d.to_path_buf(),
        None => std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("rru-out"))
            .join(name),
    }
}

/// A finished run: the summary and the manifest already written to disk.
#[derive(Debug)]
pub struct RunOutput {
    pub summary: EnsembleSummary,
    pub manifest: RunManifest,
    pub dir: PathBuf,
}

/// Runs a loaded experiment and writes every output under `dir`.
pub fn run_experiment(
    loaded: &Loaded,
    dir: &Path,
    threads: Option<usize>,
    embedding_only: bool,
) -> Result<RunOutput, LabError> {
    let started = manifest::now();
    let summary = runner::execute(&loaded.experiment, threads, embedding_only)?;
    let files = report::write_outputs(dir, &summary, &loaded.canonical, &loaded.hash)?;
    let finished = manifest::now();
    let command = if embedding_only { "embed" } else { "run" };
    let manifest = RunManifest::new(command, &loaded.hash, &summary, started, finished, dir, &files)?;
    manifest.write(dir)?;
    Ok(RunOutput { summary, manifest, dir: dir.to_path_buf() })
}

/// Exact law after `n` steps from the config's initial composition.
pub fn oracle(loaded: &Loaded, n: u64) -> Result<ExactLaw, LabError> {
    let exp = &loaded.experiment;
    enumerate_exact(exp.initial.y1(), exp.initial.y2(), &exp.laws, n, EnumerationLimits::default())
        .map_err(LabError::Enumeration)
}

/// `y1,y2,n1,probability` rows of an exact law.
pub fn oracle_csv(law: &ExactLaw) -> Result<Vec<u8>, LabError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| LabError::Internal(e.to_string());
    w.write_record(["y1", "y2", "z", "n1", "probability"]).map_err(err)?;
    for o in &law.outcomes {
        w.write_record([
            format!("{}", o.y1),
            format!("{}", o.y2),
            format!("{}", o.z()),
            o.n1.to_string(),
            format!("{}", o.probability),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| LabError::Internal(e.to_string()))
}

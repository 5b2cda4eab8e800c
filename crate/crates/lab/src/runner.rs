//! Parallel execution of an experiment.
//!
//! Replicates are cut into fixed index blocks; rayon's ordered collect puts
//! the blocks back in index order, so the thread count never reaches the
//! results.

use rayon::prelude::*;
use rru_core::harness::embedding::{atom_outcome, embedding_replicate, time_scale_outcome};
use rru_core::harness::{evaluate, run_replicates, EnsembleSummary, Experiment, ReplicateRecord, TestKind, TestOutcome};

use crate::LabError;

/// Replicates per work item.
pub const BLOCK: u64 = 16;

pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, LabError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t.max(1));
    }
    b.build().map_err(|e| LabError::Internal(e.to_string()))
}

pub fn run_ensemble(exp: &Experiment, pool: &rayon::ThreadPool) -> Result<Vec<ReplicateRecord>, LabError> {
    let r = exp.config.run.replicates;
    let blocks: Vec<(u64, u64)> = (0..r.div_ceil(BLOCK)).map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(r))).collect();
    let parts: Vec<Vec<ReplicateRecord>> = pool.install(|| {
        blocks
            .par_iter()
            .map(|&(lo, hi)| run_replicates(exp, lo..hi))
            .collect::<Result<_, _>>()
    })
    .map_err(LabError::Trajectory)?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn run_embedding(exp: &Experiment, pool: &rayon::ThreadPool) -> Result<Vec<TestOutcome>, LabError> {
    let mut out = Vec::new();
    if exp.wants(TestKind::EmbeddingAtoms) {
        out.push(atom_outcome(exp));
    }
    if exp.wants(TestKind::EmbeddingTimeScale) {
        let reps = exp.config.embedding.as_ref().map_or(0, |e| e.replicates);
        let samples = pool
            .install(|| (0..reps).into_par_iter().map(|i| embedding_replicate(exp, i)).collect::<Result<Vec<_>, _>>())
            .map_err(LabError::Embedding)?;
        out.push(time_scale_outcome(exp, &samples));
    }
    Ok(out)
}

/// Everything the experiment asks for. `embedding_only` skips the ensemble.
pub fn execute(exp: &Experiment, threads: Option<usize>, embedding_only: bool) -> Result<EnsembleSummary, LabError> {
    let pool = pool(threads)?;
    if embedding_only {
        return Ok(EnsembleSummary {
            name: exp.config.name.clone(),
            regime: exp.config.urn.regime,
            seed: exp.config.seed,
            replicates: 0,
            degenerate: 0,
            outcomes: run_embedding(exp, &pool)?,
        });
    }
    let records = if exp.needs_ensemble() { run_ensemble(exp, &pool)? } else { Vec::new() };
    let embedding = run_embedding(exp, &pool)?;
    Ok(evaluate(exp, &records, embedding))
}

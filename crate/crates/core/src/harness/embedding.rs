//! The embedding suite: atom frequencies of a fixed law and the embedded
//! urn clock against its time-scale target.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::checks::external_outcome;
use super::config::{Experiment, TestKind};
use super::{AtomRow, Detail, RatioSample, TestOutcome, Threshold};
use crate::math::{fabs, sqrt};
use crate::rng::{stream, Domain};
use crate::skorokhod::{embed_increment, embed_martingale, time_scale_ratio, CenteredFiniteLaw, SkorokhodError};

/// Stream index of the atom test inside [`Domain::Embedding`]; urn
/// replicates use `0..replicates`.
pub const ATOM_STREAM: u64 = u64::MAX;

/// One embedded urn run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScaleSample {
    pub index: u64,
    /// Normalized clock at the embedding horizon.
    pub ratio: f64,
    /// `(k, normalized T_k)` at powers of two below the horizon and at it.
    pub trace: Vec<(u64, f64)>,
}

fn section(exp: &Experiment) -> &super::config::EmbeddingSection {
    exp.config.embedding.as_ref().expect("validated config has an [embedding] section")
}

/// Embeds `horizon` urn steps with stream `index`, then continues the urn
/// plainly to the proxy horizon to fix `H` (or `ψ`).
pub fn embedding_replicate(exp: &Experiment, index: u64) -> Result<TimeScaleSample, SkorokhodError> {
    let e = section(exp);
    let regime = exp.config.urn.regime;
    let mut rng = stream(exp.config.seed, Domain::Embedding, index);
    let path = embed_martingale(exp.initial, &exp.laws, regime, e.horizon, &mut rng)?;
    let mut proxy = path.final_state;
    for _ in e.horizon..e.proxy_horizon {
        proxy.step(&exp.laws, &mut rng);
    }
    let mut trace = Vec::new();
    let mut k = 1u64;
    while k < e.horizon {
        trace.push((k, time_scale_ratio(regime, path.times[k as usize - 1], k, &exp.laws, &proxy)));
        k *= 2;
    }
    let n = e.horizon;
    let ratio = if n == 0 { f64::NAN } else { time_scale_ratio(regime, path.times[n as usize - 1], n, &exp.laws, &proxy) };
    trace.push((n, ratio));
    Ok(TimeScaleSample { index, ratio, trace })
}

/// Median of the normalized clocks against the configured window.
pub fn time_scale_outcome(exp: &Experiment, samples: &[TimeScaleSample]) -> TestOutcome {
    let bounds = exp.config.tolerances.time_scale;
    let ratios: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
    let report = crate::skorokhod::verify_time_scale(ratios, bounds);
    let mut trace: Vec<[f64; 2]> = Vec::new();
    if let Some(first) = samples.first() {
        for (j, &(k, _)) in first.trace.iter().enumerate() {
            let m = samples.iter().map(|s| s.trace[j].1).sum::<f64>() / samples.len() as f64;
            trace.push([k as f64, m]);
        }
    }
    let statistic = match exp.config.urn.regime {
        crate::urn::Regime::EqualMean => "median over replicates of T_n / (n H_proxy)",
        crate::urn::Regime::UnequalMean => "median over replicates of T_n psi_proxy / n^rho",
    };
    let mut out = external_outcome(
        exp,
        TestKind::EmbeddingTimeScale,
        String::from(statistic),
        samples.len() as u64,
        report.median,
        Threshold::Within(bounds),
        Detail::TimeScale {
            samples: samples.iter().map(|s| RatioSample { index: s.index, value: s.ratio }).collect(),
            median: report.median,
            trace,
        },
    );
    out.notes.push(format!("mean ratio {:.4}", report.mean));
    out
}

/// Embeds the configured fixed law `atom_embeddings` times.
///
/// The value is the larger of `max |z| / embed_atom_sigmas` over atoms and
/// `|mean τ / E[X²] − 1| / embed_tau_relative`; it passes below 1.
pub fn atom_outcome(exp: &Experiment) -> TestOutcome {
    let e = section(exp);
    let tol = &exp.config.tolerances;
    let entries: Vec<(f64, f64)> = e.atom_law.iter().map(|a| (a[0], a[1])).collect();
    let law = CenteredFiniteLaw::new(&entries).expect("validated atom law");
    let mut rng = stream(exp.config.seed, Domain::Embedding, ATOM_STREAM);
    let mut counts = alloc::vec![0u64; law.atoms().len()];
    let mut tau = 0.0;
    for _ in 0..e.atom_embeddings {
        let r = embed_increment(&law, &mut rng);
        counts[r.atom] += 1;
        tau += r.tau;
    }
    let n = e.atom_embeddings as f64;
    let rows: Vec<AtomRow> = law
        .atoms()
        .iter()
        .zip(&counts)
        .map(|(a, &c)| {
            let p = a.probability;
            let frequency = c as f64 / n;
            let sd = sqrt(p * (1.0 - p) / n);
            let z_score = if sd > 0.0 { (frequency - p) / sd } else { 0.0 };
            AtomRow { value: a.value, probability: p, frequency, z_score }
        })
        .collect();
    let worst_z = rows.iter().map(|r| fabs(r.z_score)).fold(0.0, f64::max);
    let mean_tau = tau / n;
    let target_tau = law.second_moment();
    let tau_err = if target_tau > 0.0 { fabs(mean_tau / target_tau - 1.0) } else { mean_tau };
    let value = (worst_z / tol.embed_atom_sigmas).max(tau_err / tol.embed_tau_relative);
    let mut out = external_outcome(
        exp,
        TestKind::EmbeddingAtoms,
        String::from("max(max |z_atom| / sigmas, |mean tau / E[X^2] - 1| / tau tolerance)"),
        e.atom_embeddings,
        value,
        Threshold::Below(1.0),
        Detail::Atoms { rows, mean_tau, target_tau },
    );
    out.notes.push(format!("max |z| {worst_z:.3}; mean tau {mean_tau:.5} vs {target_tau:.5}"));
    out
}

/// Runs the requested embedding tests serially.
pub fn embedding_outcomes(exp: &Experiment) -> Result<Vec<TestOutcome>, SkorokhodError> {
    let mut out = Vec::new();
    if exp.wants(TestKind::EmbeddingAtoms) {
        out.push(atom_outcome(exp));
    }
    if exp.wants(TestKind::EmbeddingTimeScale) {
        let e = section(exp);
        let samples = (0..e.replicates)
            .map(|i| embedding_replicate(exp, i))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(time_scale_outcome(exp, &samples));
    }
    Ok(out)
}


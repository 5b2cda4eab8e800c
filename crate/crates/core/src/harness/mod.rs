//! Ensemble verification of the limit laws.
//!
//! [`config`] describes an experiment, [`replicate`] turns one seeded urn
//! run into a [`ReplicateRecord`], and [`checks`] reduces a set of records
//! to [`TestOutcome`]s, and [`embedding`] runs the Skorokhod suite. Parallel execution is left to the caller: records
//! are pure functions of `(config, index)`, so any scheduling that keeps
//! index order gives identical summaries.

pub mod checks;
pub mod config;
pub mod embedding;
pub mod replicate;

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub use checks::evaluate;
pub use config::{ConfigError, Experiment, ExperimentConfig, TestKind, Tolerances};
pub use embedding::{embedding_outcomes, embedding_replicate, TimeScaleSample};
pub use replicate::{run_replicates, ReplicateRecord};

use crate::urn::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Threshold {
    /// Pass iff the value is strictly below the bound.
    Below(f64),
    /// Pass iff the value lies in the closed interval.
    Within([f64; 2]),
}

impl Threshold {
    pub fn accepts(&self, value: f64) -> bool {
        match *self {
            Threshold::Below(b) => value < b,
            Threshold::Within([lo, hi]) => lo <= value && value <= hi,
        }
    }
}

/// One replicate's pivot with the numbers that built it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PivotSample {
    pub index: u64,
    pub pivot: f64,
    /// `Z_n`, `ψ_n` or draw ratio at the tested horizon.
    pub observed: f64,
    /// The same quantity at the proxy horizon.
    pub proxy: f64,
    pub normalizer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub x: f64,
    pub empirical: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// Local-uniformity null rate from neighboring bins.
    pub local_rate: f64,
    pub tail_probability: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub index: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub horizon: u64,
    pub median_relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub value: f64,
    pub probability: f64,
    pub frequency: f64,
    /// `(frequency − probability) / binomial sd`.
    pub z_score: f64,
}

/// Test-specific tables kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Detail {
    Pivots {
        samples: Vec<PivotSample>,
        /// Null 1% KS critical value at this sample size.
        null_critical: f64,
    },
    Tail {
        rows: Vec<TailRow>,
        /// Two-sided bridge tail at the same grid against the Kolmogorov
        /// law; reported, not tested.
        two_sided: Vec<TailRow>,
        /// One-sided tail on a fine grid, for plotting.
        curve: Vec<TailRow>,
    },
    Histogram {
        bins: Vec<HistogramBin>,
        min: f64,
        max: f64,
    },
    Ratios {
        samples: Vec<RatioSample>,
        median: f64,
        mean: f64,
        above_fraction: f64,
    },
    Rate {
        rows: Vec<RateRow>,
    },
    Atoms {
        rows: Vec<AtomRow>,
        mean_tau: f64,
        target_tau: f64,
    },
    TimeScale {
        samples: Vec<RatioSample>,
        median: f64,
        /// `(n, mean over replicates of T_n / (n H))` or the unequal analogue.
        trace: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test: TestKind,
    /// The limit statement this test checks.
    pub anchor: String,
    pub statistic: String,
    pub sample_size: u64,
    pub excluded: u64,
    pub value: f64,
    pub threshold: Threshold,
    pub verdict: Verdict,
    /// Run with fewer replicates than the test is designed for.
    pub underpowered: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub detail: Detail,
}

impl TestOutcome {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub name: String,
    pub regime: Regime,
    pub seed: u64,
    pub replicates: u64,
    /// Replicates excluded for extreme proportions.
    pub degenerate: u64,
    pub outcomes: Vec<TestOutcome>,
}

impl EnsembleSummary {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(TestOutcome::passed)
    }

    pub fn outcome(&self, test: TestKind) -> Option<&TestOutcome> {
        self.outcomes.iter().find(|o| o.test == test)
    }
}

/// Median of a nonempty slice; the midpoint average for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

//! Experiment configuration and its validation.
//!
//! The types deserialize from any self-describing format; `rru-lab` reads
//! them from TOML. Validation errors carry the dotted key path of the
//! offending entry.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::law::{LawError, LawKind, ReinforcementLaw};
use crate::schedule::DEFAULT_RATIO;
use crate::urn::{LawPair, Regime, UrnState};

/// Proxy horizon must be at least this multiple of every tested horizon.
pub const PROXY_FACTOR: u64 = 25;
/// Replicates required by distributional tests outside smoke mode.
pub const MIN_REPLICATES: u64 = 1000;
/// Replicates required by the point-mass scan outside smoke mode.
pub const MIN_SCAN_REPLICATES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    PivotCltEqual,
    DrawCountEqual,
    BridgeTail,
    PointMassScan,
    LilEnvelope,
    PivotCltUnequal,
    DrawCountUnequal,
    PhaseTransition,
    DrawRate,
    EmbeddingAtoms,
    EmbeddingTimeScale,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::PivotCltEqual => "pivot-clt-equal",
            TestKind::DrawCountEqual => "draw-count-equal",
            TestKind::BridgeTail => "bridge-tail",
            TestKind::PointMassScan => "point-mass-scan",
            TestKind::LilEnvelope => "lil-envelope",
            TestKind::PivotCltUnequal => "pivot-clt-unequal",
            TestKind::DrawCountUnequal => "draw-count-unequal",
            TestKind::PhaseTransition => "phase-transition",
            TestKind::DrawRate => "draw-rate",
            TestKind::EmbeddingAtoms => "embedding-atoms",
            TestKind::EmbeddingTimeScale => "embedding-time-scale",
        }
    }

    /// Regime the test applies to; `None` for regime-agnostic tests.
    pub fn regime(self) -> Option<Regime> {
        match self {
            TestKind::PivotCltEqual | TestKind::DrawCountEqual | TestKind::LilEnvelope => {
                Some(Regime::EqualMean)
            }
            TestKind::PivotCltUnequal
            | TestKind::DrawCountUnequal
            | TestKind::PhaseTransition
            | TestKind::DrawRate => Some(Regime::UnequalMean),
            _ => None,
        }
    }

    /// Tests whose limit law needs a moment of order `p > 2`.
    pub fn needs_p_above_two(self) -> bool {
        matches!(
            self,
            TestKind::PivotCltEqual
                | TestKind::DrawCountEqual
                | TestKind::PivotCltUnequal
                | TestKind::DrawCountUnequal
                | TestKind::PhaseTransition
                | TestKind::BridgeTail
        )
    }

    pub fn is_distributional(self) -> bool {
        !matches!(
            self,
            TestKind::EmbeddingAtoms | TestKind::EmbeddingTimeScale | TestKind::LilEnvelope
        )
    }

    pub fn is_embedding(self) -> bool {
        matches!(self, TestKind::EmbeddingAtoms | TestKind::EmbeddingTimeScale)
    }
}

/// A law as written in a config: the distribution plus optional declared
/// moments, which must agree with the analytic ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub distribution: LawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_order: Option<f64>,
}

impl LawSpec {
    pub fn new(distribution: LawKind) -> Self {
        Self { distribution, mean: None, sigma2: None, moment_order: None }
    }

    pub fn build(&self) -> Result<ReinforcementLaw, LawError> {
        ReinforcementLaw::with_declared(
            self.distribution.clone(),
            self.mean,
            self.sigma2,
            self.moment_order,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrnSection {
    pub regime: Regime,
    pub initial: [f64; 2],
    pub law1: LawSpec,
    pub law2: LawSpec,
}

fn default_ratio() -> f64 {
    DEFAULT_RATIO
}

fn default_lil_window() -> u64 {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Tested horizon `n`.
    pub horizon: u64,
    /// Limit-proxy horizon `n∞`.
    pub proxy_horizon: u64,
    pub replicates: u64,
    /// Extra horizons for the draw-rate test; defaults to `[horizon]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_horizons: Vec<u64>,
    /// Every-step recording length; defaults to `horizon` when the bridge
    /// test is requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_prefix: Option<u64>,
    /// Ratio of the iterated-log checkpoint grid on `[n∞/lil_window, n∞]`.
    #[serde(default = "default_ratio")]
    pub lil_grid_ratio: f64,
    #[serde(default = "default_lil_window")]
    pub lil_window: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon: 0,
            proxy_horizon: 0,
            replicates: 0,
            rate_horizons: Vec::new(),
            dense_prefix: None,
            lil_grid_ratio: DEFAULT_RATIO,
            lil_window: default_lil_window(),
        }
    }
}

impl RunSection {
    pub fn is_unset(&self) -> bool {
        *self == Self::default()
    }
}

fn default_atom_law() -> Vec<[f64; 2]> {
    alloc::vec![[-1.0, 0.5], [1.0, 0.5]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    /// `(value, probability)` atoms of the fixed law for the atom test.
    #[serde(default = "default_atom_law")]
    pub atom_law: Vec<[f64; 2]>,
    pub atom_embeddings: u64,
    /// Embedded urn runs for the time-scale test.
    pub replicates: u64,
    pub horizon: u64,
    pub proxy_horizon: u64,
}

/// Per-test thresholds. Missing keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// KS bound for the equal-mean proportion pivot.
    pub pivot_clt_equal: f64,
    pub draw_count_equal: f64,
    pub pivot_clt_unequal: f64,
    pub draw_count_unequal: f64,
    /// KS bound for the `ρ < 2/3` branch of the phase-transition test.
    pub phase_normal: f64,
    /// Relative band for the `ρ > 2/3` drift limit.
    pub phase_drift: f64,
    pub rate_relative: f64,
    /// Max absolute deviation of the bridge tail from `exp(−2x²)`.
    pub bridge_tail: f64,
    pub bridge_grid: Vec<f64>,
    pub point_mass_level: f64,
    /// Histogram bin width on the `log ψ` scale.
    pub point_mass_bin_width: f64,
    pub lil_median: [f64; 2],
    pub lil_exceed_level: f64,
    pub lil_exceed_fraction: f64,
    pub embed_atom_sigmas: f64,
    pub embed_tau_relative: f64,
    pub time_scale: [f64; 2],
    /// Null draws for the reported KS critical value; 0 uses the asymptotic
    /// Kolmogorov quantile.
    pub ks_null_sims: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pivot_clt_equal: 0.03,
            draw_count_equal: 0.04,
            pivot_clt_unequal: 0.04,
            draw_count_unequal: 0.05,
            phase_normal: 0.05,
            phase_drift: 0.15,
            rate_relative: 0.10,
            bridge_tail: 0.03,
            bridge_grid: alloc::vec![0.25, 0.5, 0.75, 1.0],
            point_mass_level: 1e-6,
            point_mass_bin_width: 0.25,
            lil_median: [0.3, 1.5],
            lil_exceed_level: 2.0,
            lil_exceed_fraction: 0.01,
            embed_atom_sigmas: 4.0,
            embed_tau_relative: 0.02,
            time_scale: [0.95, 1.05],
            ks_null_sims: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Permits undersized ensembles; verdicts are marked underpowered.
    #[serde(default)]
    pub smoke: bool,
    pub tests: Vec<TestKind>,
    pub urn: UrnSection,
    /// Required unless only embedding tests are requested.
    #[serde(default, skip_serializing_if = "RunSection::is_unset")]
    pub run: RunSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingSection>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

/// A validated configuration with its laws built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub laws: LawPair,
    pub initial: UrnState,
}

fn law_error_path(prefix: &str, err: &LawError) -> String {
    match err {
        LawError::MomentMismatch { moment, .. } => format!("{prefix}.{moment}"),
        LawError::MomentOrderTooSmall { .. } => format!("{prefix}.moment_order"),
        LawError::InvalidParameter { name, .. } => format!("{prefix}.distribution.{name}"),
        LawError::NonPositiveMean(_) => format!("{prefix}.distribution"),
    }
}

impl Experiment {
    pub fn rho(&self) -> f64 {
        self.laws.rho()
    }

    /// Horizons at which replicate checkpoints are kept: rate horizons plus
    /// the tested horizon, sorted.
    pub fn horizons(&self) -> Vec<u64> {
        let mut hs = self.config.run.rate_horizons.clone();
        hs.push(self.config.run.horizon);
        hs.sort_unstable();
        hs.dedup();
        hs
    }

    pub fn wants(&self, test: TestKind) -> bool {
        self.config.tests.contains(&test)
    }

    /// Length of the every-step recording, if any test needs one.
    pub fn dense_prefix(&self) -> Option<u64> {
        if self.wants(TestKind::BridgeTail) {
            Some(self.config.run.dense_prefix.unwrap_or(self.config.run.horizon))
        } else {
            None
        }
    }

    /// Whether the ensemble stage (anything but the embedding suite) runs.
    pub fn needs_ensemble(&self) -> bool {
        self.config.tests.iter().any(|t| !t.is_embedding())
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let urn = &self.urn;
        let initial = UrnState::new(urn.initial[0], urn.initial[1])
            .map_err(|e| ConfigError::new("urn.initial", e.to_string()))?;
        let law1 = urn.law1.build().map_err(|e| ConfigError::new(law_error_path("urn.law1", &e), e.to_string()))?;
        let law2 = urn.law2.build().map_err(|e| ConfigError::new(law_error_path("urn.law2", &e), e.to_string()))?;
        let (m1, m2) = (law1.mean(), law2.mean());
        match urn.regime {
            Regime::EqualMean if m1 != m2 => {
                return Err(ConfigError::new(
                    "urn.regime",
                    format!("equal-mean regime declared but m_1 = {m1}, m_2 = {m2}"),
                ))
            }
            Regime::UnequalMean if m1 == m2 => {
                return Err(ConfigError::new(
                    "urn.regime",
                    format!("unequal-mean regime declared but m_1 = m_2 = {m1}"),
                ))
            }
            Regime::UnequalMean if m1 > m2 => {
                return Err(ConfigError::new(
                    "urn.regime",
                    format!("unequal-mean regime needs m_1 < m_2, got {m1} > {m2}; swap the colors"),
                ))
            }
            _ => {}
        }
        let laws = LawPair::new(law1, law2);
        let exp = Experiment { config: self.clone(), laws, initial };
        self.validate_tests(&exp)?;
        self.validate_run(&exp)?;
        self.validate_tolerances()?;
        Ok(exp)
    }

    fn validate_tests(&self, exp: &Experiment) -> Result<(), ConfigError> {
        if self.tests.is_empty() {
            return Err(ConfigError::new("tests", "no tests requested"));
        }
        for (i, t) in self.tests.iter().enumerate() {
            let path = format!("tests[{i}]");
            if self.tests[..i].contains(t) {
                return Err(ConfigError::new(path, format!("`{}` listed twice", t.name())));
            }
            if let Some(r) = t.regime() {
                if r != self.urn.regime {
                    return Err(ConfigError::new(
                        path,
                        format!("`{}` does not apply to the {:?} regime", t.name(), self.urn.regime),
                    ));
                }
            }
            if t.needs_p_above_two() {
                for (k, law) in [exp.laws.first(), exp.laws.second()].iter().enumerate() {
                    if !(law.moment_order() > 2.0) {
                        return Err(ConfigError::new(
                            format!("urn.law{}.moment_order", k + 1),
                            format!("`{}` needs finite moments of some order p > 2", t.name()),
                        ));
                    }
                }
            }
            if *t == TestKind::PhaseTransition && libm::fabs(exp.rho() - 2.0 / 3.0) < 1e-12 {
                return Err(ConfigError::new(path, "phase transition undefined at rho = 2/3"));
            }
            if t.is_embedding() && self.embedding.is_none() {
                return Err(ConfigError::new("embedding", format!("`{}` needs an [embedding] section", t.name())));
            }
            if *t == TestKind::EmbeddingTimeScale
                && (exp.laws.first().finite_support().is_none() || exp.laws.second().finite_support().is_none())
            {
                return Err(ConfigError::new(
                    "urn",
                    "the embedded urn martingale needs finite-support reinforcement laws",
                ));
            }
        }
        Ok(())
    }

    fn validate_run(&self, exp: &Experiment) -> Result<(), ConfigError> {
        let run = &self.run;
        if !exp.needs_ensemble() {
            return self.validate_embedding();
        }
        if run.horizon == 0 {
            return Err(ConfigError::new("run.horizon", "must be at least 1"));
        }
        if run.replicates == 0 {
            return Err(ConfigError::new("run.replicates", "must be at least 1"));
        }
        for (i, &h) in run.rate_horizons.iter().enumerate() {
            if h == 0 || h > run.horizon {
                return Err(ConfigError::new(
                    format!("run.rate_horizons[{i}]"),
                    format!("{h} must lie in [1, horizon = {}]", run.horizon),
                ));
            }
        }
        let needed = run.horizon.saturating_mul(PROXY_FACTOR);
        if exp.needs_ensemble() && run.proxy_horizon < needed {
            return Err(ConfigError::new(
                "run.proxy_horizon",
                format!("{} is below {PROXY_FACTOR} x horizon = {needed}", run.proxy_horizon),
            ));
        }
        if let Some(d) = run.dense_prefix {
            if exp.wants(TestKind::BridgeTail) && d < run.horizon {
                return Err(ConfigError::new(
                    "run.dense_prefix",
                    format!("bridge test needs every step up to horizon {}, dense prefix is {d}", run.horizon),
                ));
            }
            if d > run.proxy_horizon {
                return Err(ConfigError::new("run.dense_prefix", "exceeds the proxy horizon"));
            }
        }
        if !self.smoke {
            if run.replicates < MIN_REPLICATES && self.tests.iter().any(|t| t.is_distributional()) {
                return Err(ConfigError::new(
                    "run.replicates",
                    format!("distributional tests need at least {MIN_REPLICATES} replicates (set smoke = true to override)"),
                ));
            }
            if run.replicates < MIN_SCAN_REPLICATES && exp.wants(TestKind::PointMassScan) {
                return Err(ConfigError::new(
                    "run.replicates",
                    format!("point-mass scan needs at least {MIN_SCAN_REPLICATES} replicates (set smoke = true to override)"),
                ));
            }
        }
        if exp.wants(TestKind::LilEnvelope) {
            if !(run.lil_grid_ratio > 1.0) {
                return Err(ConfigError::new("run.lil_grid_ratio", "must exceed 1"));
            }
            if run.lil_window == 0 || run.proxy_horizon / run.lil_window < 16 {
                return Err(ConfigError::new(
                    "run.lil_window",
                    "iterated-log window must start at n >= 16",
                ));
            }
        }
        self.validate_embedding()
    }

    fn validate_embedding(&self) -> Result<(), ConfigError> {
        if let Some(e) = &self.embedding {
            if self.tests.contains(&TestKind::EmbeddingTimeScale) {
                if e.horizon == 0 || e.replicates == 0 {
                    return Err(ConfigError::new("embedding", "horizon and replicates must be positive"));
                }
                if e.proxy_horizon < e.horizon.saturating_mul(PROXY_FACTOR) {
                    return Err(ConfigError::new(
                        "embedding.proxy_horizon",
                        format!("must be at least {PROXY_FACTOR} x embedding horizon"),
                    ));
                }
            }
            if self.tests.contains(&TestKind::EmbeddingAtoms) {
                if e.atom_embeddings == 0 {
                    return Err(ConfigError::new("embedding.atom_embeddings", "must be positive"));
                }
                let atoms: Vec<(f64, f64)> = e.atom_law.iter().map(|a| (a[0], a[1])).collect();
                crate::skorokhod::CenteredFiniteLaw::new(&atoms)
                    .map_err(|err| ConfigError::new("embedding.atom_law", err.to_string()))?;
            }
        }
        Ok(())
    }

    fn validate_tolerances(&self) -> Result<(), ConfigError> {
        let t = &self.tolerances;
        let positive = [
            ("pivot_clt_equal", t.pivot_clt_equal),
            ("draw_count_equal", t.draw_count_equal),
            ("pivot_clt_unequal", t.pivot_clt_unequal),
            ("draw_count_unequal", t.draw_count_unequal),
            ("phase_normal", t.phase_normal),
            ("phase_drift", t.phase_drift),
            ("rate_relative", t.rate_relative),
            ("bridge_tail", t.bridge_tail),
            ("point_mass_level", t.point_mass_level),
            ("point_mass_bin_width", t.point_mass_bin_width),
            ("lil_exceed_level", t.lil_exceed_level),
            ("embed_atom_sigmas", t.embed_atom_sigmas),
            ("embed_tau_relative", t.embed_tau_relative),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::new(format!("tolerances.{name}"), "must be positive and finite"));
            }
        }
        for (name, [lo, hi]) in [("lil_median", t.lil_median), ("time_scale", t.time_scale)] {
            if !(lo < hi) {
                return Err(ConfigError::new(format!("tolerances.{name}"), "needs lower < upper"));
            }
        }
        if !(0.0..=1.0).contains(&t.lil_exceed_fraction) {
            return Err(ConfigError::new("tolerances.lil_exceed_fraction", "must lie in [0, 1]"));
        }
        if t.bridge_grid.is_empty() || t.bridge_grid.iter().any(|x| !(*x > 0.0)) {
            return Err(ConfigError::new("tolerances.bridge_grid", "needs positive grid points"));
        }
        if t.bridge_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new("tolerances.bridge_grid", "must be strictly increasing"));
        }
        Ok(())
    }
}

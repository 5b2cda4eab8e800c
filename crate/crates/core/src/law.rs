//! Reinforcement distributions.
//!
//! A [`ReinforcementLaw`] is one of a handful of parametric nonnegative laws.
//! Each exposes its analytic mean `m`, its normalized second moment
//! `σ² = E[(U/m)²]`, and the order `p` of finite moments it is declared to
//! satisfy. Declared moments are checked against the analytic ones at
//! construction, so a configuration cannot silently mis-state a limit-law
//! hypothesis.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Beta, Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::math::{exp, fabs};

/// Relative tolerance for declared-versus-analytic moment checks.
pub const MOMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawKind {
    Constant { value: f64 },
    TwoPoint { a: f64, b: f64, p_a: f64 },
    Discrete { values: Vec<f64>, weights: Vec<f64> },
    ScaledBeta { alpha: f64, beta: f64, scale: f64 },
    LogNormal { mu_log: f64, sigma_log: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LawError {
    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("reinforcement mean must be positive, got {0}")]
    NonPositiveMean(f64),
    #[error("declared {moment} = {declared} does not match analytic value {analytic}")]
    MomentMismatch {
        moment: &'static str,
        declared: f64,
        analytic: f64,
    },
    #[error("declared moment order {declared} must be at least 2")]
    MomentOrderTooSmall { declared: f64 },
}

#[derive(Debug, Clone)]
enum Sampler {
    Constant(f64),
    TwoPoint { a: f64, b: f64, p_a: f64 },
    Discrete { values: Vec<f64>, cumulative: Vec<f64> },
    ScaledBeta { dist: Beta<f64>, scale: f64 },
    LogNormal(LogNormal<f64>),
}

/// A validated reinforcement law μ_k.
#[derive(Debug, Clone)]
pub struct ReinforcementLaw {
    kind: LawKind,
    mean: f64,
    inv_mean: f64,
    sigma2: f64,
    moment_order: f64,
    sampler: Sampler,
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), LawError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(LawError::InvalidParameter { name, value, reason })
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    fabs(a - b) / fabs(b).max(f64::MIN_POSITIVE)
}

impl ReinforcementLaw {
    /// Builds a law from its kind, computing moments analytically.
    ///
    /// All supported kinds have finite moments of every order, so the
    /// moment order defaults to `+∞`.
    pub fn new(kind: LawKind) -> Result<Self, LawError> {
        let (mean, sigma2, sampler) = match &kind {
            LawKind::Constant { value } => {
                check("value", *value, *value >= 0.0, "must be nonnegative")?;
                (*value, 1.0, Sampler::Constant(*value))
            }
            LawKind::TwoPoint { a, b, p_a } => {
                check("a", *a, *a >= 0.0, "must be nonnegative")?;
                check("b", *b, *b >= 0.0, "must be nonnegative")?;
                check("p_a", *p_a, (0.0..=1.0).contains(p_a), "must lie in [0, 1]")?;
                let mean = a * p_a + b * (1.0 - p_a);
                let var = p_a * (1.0 - p_a) * (a - b) * (a - b);
                let sigma2 = if mean > 0.0 { 1.0 + var / (mean * mean) } else { f64::NAN };
                (mean, sigma2, Sampler::TwoPoint { a: *a, b: *b, p_a: *p_a })
            }
            LawKind::Discrete { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(LawError::InvalidParameter {
                        name: "weights",
                        value: weights.len() as f64,
                        reason: "need one weight per value and at least one value",
                    });
                }
                for v in values {
                    check("values", *v, *v >= 0.0, "must be nonnegative")?;
                }
                for w in weights {
                    check("weights", *w, *w >= 0.0, "must be nonnegative")?;
                }
                let total: f64 = weights.iter().sum();
                check("weights", total, total > 0.0, "must have positive total")?;
                let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
                let var = values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| w * (v - mean) * (v - mean))
                    .sum::<f64>()
                    / total;
                let sigma2 = if mean > 0.0 { 1.0 + var / (mean * mean) } else { f64::NAN };
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w / total;
                        acc
                    })
                    .collect();
                (mean, sigma2, Sampler::Discrete { values: values.clone(), cumulative })
            }
            LawKind::ScaledBeta { alpha, beta, scale } => {
                check("alpha", *alpha, *alpha > 0.0, "must be positive")?;
                check("beta", *beta, *beta > 0.0, "must be positive")?;
                check("scale", *scale, *scale > 0.0, "must be positive")?;
                let s = alpha + beta;
                let mean = scale * alpha / s;
                // E[B²]/E[B]² - 1 = β / (α (α+β+1))
                let sigma2 = 1.0 + beta / (alpha * (s + 1.0));
                let dist = Beta::new(*alpha, *beta).map_err(|_| LawError::InvalidParameter {
                    name: "alpha",
                    value: *alpha,
                    reason: "rejected by beta sampler",
                })?;
                (mean, sigma2, Sampler::ScaledBeta { dist, scale: *scale })
            }
            LawKind::LogNormal { mu_log, sigma_log } => {
                check("mu_log", *mu_log, true, "must be finite")?;
                check("sigma_log", *sigma_log, *sigma_log >= 0.0, "must be nonnegative")?;
                let mean = exp(mu_log + sigma_log * sigma_log / 2.0);
                let sigma2 = exp(sigma_log * sigma_log);
                let dist = LogNormal::new(*mu_log, *sigma_log).map_err(|_| {
                    LawError::InvalidParameter {
                        name: "sigma_log",
                        value: *sigma_log,
                        reason: "rejected by lognormal sampler",
                    }
                })?;
                (mean, sigma2, Sampler::LogNormal(dist))
            }
        };
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(LawError::NonPositiveMean(mean));
        }
        Ok(Self {
            kind,
            mean,
            inv_mean: 1.0 / mean,
            sigma2,
            moment_order: f64::INFINITY,
            sampler,
        })
    }

    /// Builds a law and checks user-declared moments against the analytic ones.
    pub fn with_declared(
        kind: LawKind,
        mean: Option<f64>,
        sigma2: Option<f64>,
        moment_order: Option<f64>,
    ) -> Result<Self, LawError> {
        let mut law = Self::new(kind)?;
        if let Some(declared) = mean {
            if !(relative_gap(declared, law.mean) <= MOMENT_TOLERANCE) {
                return Err(LawError::MomentMismatch {
                    moment: "mean",
                    declared,
                    analytic: law.mean,
                });
            }
        }
        if let Some(declared) = sigma2 {
            if !(relative_gap(declared, law.sigma2) <= MOMENT_TOLERANCE) {
                return Err(LawError::MomentMismatch {
                    moment: "sigma2",
                    declared,
                    analytic: law.sigma2,
                });
            }
        }
        if let Some(p) = moment_order {
            if !(p >= 2.0) {
                return Err(LawError::MomentOrderTooSmall { declared: p });
            }
            // Every supported kind has all moments; a declaration can only weaken it.
            law.moment_order = p;
        }
        Ok(law)
    }

    pub fn constant(value: f64) -> Result<Self, LawError> {
        Self::new(LawKind::Constant { value })
    }

    pub fn two_point(a: f64, b: f64, p_a: f64) -> Result<Self, LawError> {
        Self::new(LawKind::TwoPoint { a, b, p_a })
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    /// Mean `m_k`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    #[inline]
    pub(crate) fn inv_mean(&self) -> f64 {
        self.inv_mean
    }

    /// `σ_k² = E[(U/m_k)²]`; equals 1 exactly for a point mass.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn moment_order(&self) -> f64 {
        self.moment_order
    }

    pub fn is_point_mass(&self) -> bool {
        self.sigma2 == 1.0
    }

    /// Atoms `(value, probability)` for finite-support kinds, merged and
    /// sorted by value, zero-probability atoms dropped.
    pub fn finite_support(&self) -> Option<Vec<(f64, f64)>> {
        let mut atoms: Vec<(f64, f64)> = match &self.kind {
            LawKind::Constant { value } => alloc::vec![(*value, 1.0)],
            LawKind::TwoPoint { a, b, p_a } => alloc::vec![(*a, *p_a), (*b, 1.0 - *p_a)],
            LawKind::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                values.iter().zip(weights).map(|(v, w)| (*v, w / total)).collect()
            }
            LawKind::ScaledBeta { .. } | LawKind::LogNormal { .. } => return None,
        };
        atoms.retain(|(_, p)| *p > 0.0);
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        Some(merged)
    }

    /// Draws one reinforcement.
    #[inline(always)]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.sampler {
            Sampler::Constant(v) => *v,
            Sampler::TwoPoint { a, b, p_a } => {
                // Indexed select keeps the 50/50 branch out of the predictor.
                let pick_a = (rng.random::<f64>() < *p_a) as usize;
                [*b, *a][pick_a]
            }
            other => other.sample_slow(rng),
        }
    }
}

impl Sampler {
    #[inline(never)]
    fn sample_slow<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Constant(v) => *v,
            Sampler::TwoPoint { a, b, p_a } => {
                if rng.random::<f64>() < *p_a {
                    *a
                } else {
                    *b
                }
            }
            Sampler::Discrete { values, cumulative } => {
                let u = rng.random::<f64>();
                let i = cumulative.iter().position(|c| u < *c).unwrap_or(values.len() - 1);
                values[i]
            }
            Sampler::ScaledBeta { dist, scale } => scale * dist.sample(rng),
            Sampler::LogNormal(dist) => dist.sample(rng),
        }
    }
}

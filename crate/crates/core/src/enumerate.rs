//! Exact law of the urn after a few steps, by brute-force enumeration.
//!
//! Used as ground truth by the simulation tests. Each step branches on the
//! drawn color and on every reinforcement atom; states that coincide are
//! merged so the table stays polynomial in `n` for small supports.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math::fabs;
use crate::urn::LawPair;

pub const DEFAULT_MAX_STEPS: u64 = 12;
pub const DEFAULT_MAX_STATES: u64 = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactOutcome {
    pub y1: f64,
    pub y2: f64,
    pub n1: u64,
    pub probability: f64,
}

impl ExactOutcome {
    pub fn z(&self) -> f64 {
        self.y1 / (self.y1 + self.y2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactLaw {
    pub steps: u64,
    pub outcomes: Vec<ExactOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    pub max_steps: u64,
    pub max_states: u64,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnumerationError {
    #[error("reinforcement law of color {0} does not have finite support")]
    NotFinite(u8),
    #[error("{requested} steps exceeds the enumeration bound {bound}")]
    TooManySteps { requested: u64, bound: u64 },
    #[error("enumeration could reach ~{estimate} states, above the limit {limit}")]
    SupportTooLarge { estimate: f64, limit: u64 },
    #[error("initial masses must be positive")]
    InitialMass,
}

fn multichoose(k: usize, j: u64) -> f64 {
    // C(j + k − 1, j)
    let mut acc = 1.0;
    for i in 1..=j {
        acc *= (k as f64 - 1.0 + i as f64) / i as f64;
    }
    acc
}

/// Upper bound on distinct `(y1, y2, n1)` states after `n` steps.
pub fn state_count_bound(k1: usize, k2: usize, n: u64) -> f64 {
    (0..=n).map(|j| multichoose(k1, j) * multichoose(k2, n - j)).sum()
}

fn close(a: f64, b: f64) -> bool {
    fabs(a - b) <= 1e-12 * a.abs_max(b)
}

trait AbsMax {
    fn abs_max(self, other: f64) -> f64;
}

impl AbsMax for f64 {
    fn abs_max(self, other: f64) -> f64 {
        let m = fabs(self).max(fabs(other));
        if m > 0.0 { m } else { 1.0 }
    }
}

fn merge(mut outcomes: Vec<ExactOutcome>) -> Vec<ExactOutcome> {
    outcomes.sort_by(|a, b| {
        a.n1.cmp(&b.n1)
            .then(a.y1.total_cmp(&b.y1))
            .then(a.y2.total_cmp(&b.y2))
    });
    let mut merged: Vec<ExactOutcome> = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match merged.last_mut() {
            Some(last) if last.n1 == o.n1 && close(last.y1, o.y1) && close(last.y2, o.y2) => {
                last.probability += o.probability;
            }
            _ => merged.push(o),
        }
    }
    merged
}

/// Exact joint law of `(Y_{n,1}, Y_{n,2}, N_{n,1})` from `(y1, y2)`.
pub fn enumerate_exact(
    y1: f64,
    y2: f64,
    laws: &LawPair,
    n: u64,
    limits: EnumerationLimits,
) -> Result<ExactLaw, EnumerationError> {
    if !(y1 > 0.0 && y2 > 0.0) {
        return Err(EnumerationError::InitialMass);
    }
    let first = laws.first().finite_support().ok_or(EnumerationError::NotFinite(1))?;
    let second = laws.second().finite_support().ok_or(EnumerationError::NotFinite(2))?;
    if n > limits.max_steps {
        return Err(EnumerationError::TooManySteps {
            requested: n,
            bound: limits.max_steps,
        });
    }
    let estimate = state_count_bound(first.len(), second.len(), n);
    if estimate > limits.max_states as f64 {
        return Err(EnumerationError::SupportTooLarge {
            estimate,
            limit: limits.max_states,
        });
    }
    let mut outcomes = alloc::vec![ExactOutcome { y1, y2, n1: 0, probability: 1.0 }];
    for _ in 0..n {
        let mut next = Vec::with_capacity(outcomes.len() * (first.len() + second.len()));
        for o in &outcomes {
            let p1 = o.y1 / (o.y1 + o.y2);
            for &(u, q) in &first {
                next.push(ExactOutcome {
                    y1: o.y1 + u,
                    y2: o.y2,
                    n1: o.n1 + 1,
                    probability: o.probability * p1 * q,
                });
            }
            for &(u, q) in &second {
                next.push(ExactOutcome {
                    y1: o.y1,
                    y2: o.y2 + u,
                    n1: o.n1,
                    probability: o.probability * (1.0 - p1) * q,
                });
            }
        }
        outcomes = merge(next);
    }
    Ok(ExactLaw { steps: n, outcomes })
}

impl ExactLaw {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    /// Marginal law of `Z_n`, atoms sorted by value.
    pub fn z_distribution(&self) -> Vec<(f64, f64)> {
        let mut atoms: Vec<(f64, f64)> =
            self.outcomes.iter().map(|o| (o.z(), o.probability)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (z, p) in atoms {
            match merged.last_mut() {
                Some(last) if close(last.0, z) => last.1 += p,
                _ => merged.push((z, p)),
            }
        }
        merged
    }

    /// Marginal law of `N_{n,1}` indexed by count.
    pub fn draw_count_distribution(&self) -> Vec<f64> {
        let mut probs = alloc::vec![0.0; self.steps as usize + 1];
        for o in &self.outcomes {
            probs[o.n1 as usize] += o.probability;
        }
        probs
    }

    pub fn mean_z(&self) -> f64 {
        self.outcomes.iter().map(|o| o.z() * o.probability).sum()
    }
}

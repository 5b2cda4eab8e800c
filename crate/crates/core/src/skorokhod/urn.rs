//! The urn martingale, embedded step by step.
//!
//! Equal means: `ΔM_n = m_1 n (X_{n,1} Ũ_{n,1}/Y_{n−1,1} − X_{n,2} Ũ_{n,2}/Y_{n−1,2})`
//! with `Ũ = U/m`, whose conditional variance is
//! `(m_1 n/|Y_{n−1}|)² (σ_1²/Z_{n−1} + σ_2²/(1 − Z_{n−1}))`.
//!
//! Unequal means: `ΔM_n = c_n (X_{n,1} Ũ_{n,1}/Y_{n−1,1} − 1/|Y_{n−1}|)` with
//! `c_n = √(ρ m_2) (m_2 n)^{ρ/2} n^{ρ/2} / σ_1`, conditional variance
//! `c_n² (σ_1²/(|Y_{n−1}| Y_{n−1,1}) − 1/|Y_{n−1}|²)`.
//!
//! Each increment law is built from the current state, embedded, and the
//! stopped atom is mapped back to a (color, reinforcement) draw that updates
//! the urn, so the urn path and `B(T_n)` are one coupled realization.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{embed_increment, CenteredFiniteLaw, SkorokhodError};
use crate::math::{pow, sqrt};
use crate::urn::{Color, LawPair, Regime, UrnState};

/// Conditional law of one increment, with the draw behind each input entry.
#[derive(Debug, Clone)]
pub struct IncrementLaw {
    pub law: CenteredFiniteLaw,
    pub draws: Vec<(Color, f64)>,
}

fn supports(laws: &LawPair) -> Result<[Vec<(f64, f64)>; 2], SkorokhodError> {
    let one = laws.first().finite_support().ok_or(SkorokhodError::Unsupported { color: 1 })?;
    let two = laws.second().finite_support().ok_or(SkorokhodError::Unsupported { color: 2 })?;
    Ok([one, two])
}

fn build(
    entries: Vec<(f64, f64)>,
    draws: Vec<(Color, f64)>,
    step: u64,
) -> Result<IncrementLaw, SkorokhodError> {
    let law = CenteredFiniteLaw::new(&entries).map_err(|e| match e {
        SkorokhodError::NotCentered { .. } | SkorokhodError::ProbabilitySum { .. } => {
            SkorokhodError::Increment { step, reason: "conditional law lost normalization" }
        }
        other => other,
    })?;
    Ok(IncrementLaw { law, draws })
}

/// Law of the equal-mean `ΔM_step` given `state = Y_{step−1}`.
pub fn equal_mean_increment(
    state: &UrnState,
    laws: &LawPair,
    step: u64,
) -> Result<IncrementLaw, SkorokhodError> {
    let support = supports(laws)?;
    let (m1, _) = laws.means();
    let (p1, p2) = state.draw_probability();
    let scale = m1 * step as f64;
    let mut entries = Vec::new();
    let mut draws = Vec::new();
    for (k, (sign, p, y)) in [(1.0, p1, state.y1()), (-1.0, p2, state.y2())].into_iter().enumerate() {
        let color = Color::from_index(k);
        let m = laws.get(color).mean();
        for &(u, q) in &support[k] {
            entries.push((sign * scale * (u / m) / y, p * q));
            draws.push((color, u));
        }
    }
    build(entries, draws, step)
}

/// `E[ΔM_step² | Y_{step−1}]` in the equal-mean case.
pub fn equal_mean_variance(state: &UrnState, laws: &LawPair, step: u64) -> f64 {
    let (m1, _) = laws.means();
    let (s1, s2) = laws.sigma2();
    let z = state.z();
    let f = m1 * step as f64 / state.total();
    f * f * (s1 / z + s2 / (1.0 - z))
}

fn unequal_factor(laws: &LawPair, step: u64) -> f64 {
    let (_, m2) = laws.means();
    let (s1, _) = laws.sigma2();
    let rho = laws.rho();
    let n = step as f64;
    sqrt(rho * m2) * pow(m2 * n, rho / 2.0) * pow(n, rho / 2.0) / sqrt(s1)
}

/// Law of the unequal-mean `ΔM_step` given `state = Y_{step−1}`.
pub fn unequal_mean_increment(
    state: &UrnState,
    laws: &LawPair,
    step: u64,
) -> Result<IncrementLaw, SkorokhodError> {
    let support = supports(laws)?;
    let (m1, _) = laws.means();
    let (p1, p2) = state.draw_probability();
    let c = unequal_factor(laws, step);
    let total = state.total();
    let mut entries = Vec::new();
    let mut draws = Vec::new();
    for &(u, q) in &support[0] {
        entries.push((c * ((u / m1) / state.y1() - 1.0 / total), p1 * q));
        draws.push((Color::One, u));
    }
    for &(u, q) in &support[1] {
        entries.push((-c / total, p2 * q));
        draws.push((Color::Two, u));
    }
    build(entries, draws, step)
}

/// `E[ΔM_step² | Y_{step−1}]` in the unequal-mean case.
pub fn unequal_mean_variance(state: &UrnState, laws: &LawPair, step: u64) -> f64 {
    let (s1, _) = laws.sigma2();
    let c = unequal_factor(laws, step);
    let total = state.total();
    c * c * (s1 / (total * state.y1()) - 1.0 / (total * total))
}

/// `T_k` and `B(T_k)` for `k = 1..=n`, with the urn they drove.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `Σ E[ΔM_k² | F_{k−1}]` along the path.
    pub conditional_variance: f64,
    pub final_state: UrnState,
}

/// Runs `horizon` embedded steps from `initial`.
///
/// Reinforcements whose increment atoms coincide (for example the zero atom,
/// or every color-2 draw in the unequal case) are told apart by
/// [`CenteredFiniteLaw::sample_source`], so the urn sees the exact
/// conditional law of the next draw.
pub fn embed_martingale<R: Rng + ?Sized>(
    initial: UrnState,
    laws: &LawPair,
    regime: Regime,
    horizon: u64,
    rng: &mut R,
) -> Result<EmbeddedPath, SkorokhodError> {
    let mut state = initial;
    let mut times = Vec::with_capacity(horizon as usize);
    let mut values = Vec::with_capacity(horizon as usize);
    let (mut t, mut b, mut var) = (0.0, 0.0, 0.0);
    for step in 1..=horizon {
        let inc = match regime {
            Regime::EqualMean => equal_mean_increment(&state, laws, step)?,
            Regime::UnequalMean => unequal_mean_increment(&state, laws, step)?,
        };
        var += match regime {
            Regime::EqualMean => equal_mean_variance(&state, laws, step),
            Regime::UnequalMean => unequal_mean_variance(&state, laws, step),
        };
        let r = embed_increment(&inc.law, rng);
        let (color, u) = inc.draws[inc.law.sample_source(r.atom, rng)];
        state
            .apply(color, u, laws)
            .map_err(|_| SkorokhodError::Increment { step, reason: "urn rejected the embedded draw" })?;
        t += r.tau;
        b += r.value;
        times.push(t);
        values.push(b);
    }
    Ok(EmbeddedPath { times, values, conditional_variance: var, final_state: state })
}

/// Ensemble summary of normalized embedding clocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScaleReport {
    pub ratios: Vec<f64>,
    pub median: f64,
    pub mean: f64,
    pub pass: bool,
}

/// `T_n / (n H_proxy)` (equal means) or `T_n ψ_proxy / n^ρ` (unequal).
pub fn time_scale_ratio(regime: Regime, t_n: f64, n: u64, laws: &LawPair, proxy: &UrnState) -> f64 {
    match regime {
        Regime::EqualMean => {
            let (s1, s2) = laws.sigma2();
            t_n / (n as f64 * crate::stats::time_scale(proxy.z(), s1, s2))
        }
        Regime::UnequalMean => {
            let rho = laws.rho();
            t_n * crate::stats::psi(proxy.y1(), proxy.y2(), rho) / pow(n as f64, rho)
        }
    }
}

/// Pass iff the median ratio lies in `bounds`.
pub fn verify_time_scale(ratios: Vec<f64>, bounds: [f64; 2]) -> TimeScaleReport {
    let median = crate::harness::median(&ratios);
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let pass = median >= bounds[0] && median <= bounds[1];
    TimeScaleReport { ratios, median, mean, pass }
}

//! Path statistics of the urn.
//!
//! Equal means (`m_1 = m_2`): the color-1 proportion `Z_n`, its mixing scale
//! `σ̃_n = √(Z(1−Z)) · √((1−Z)σ_1² + Zσ_2²)`, the time-scale factor
//! `H_n = σ_1²/Z + σ_2²/(1−Z)`, the draw-count scale
//! `h_n = √(Z(1−Z)) · √((1−Z)(2σ_1²−1) + Z(2σ_2²−1))`, and the normalized
//! reinforcement residuals `A_{n,k}`.
//!
//! Unequal means (`m_1 < m_2`, `ρ = m_1/m_2`): `ψ_n = Y_{n,1}/Y_{n,2}^ρ`, the
//! log-ratio `Q_n = log Y_{n,1}/m_1 − log Y_{n,2}/m_2 = log ψ_n / m_1`, the
//! draw-ratio estimate `η̂_n = ψ_n m_2^ρ / m_1` and the pivot scale
//! `s_n = σ_1 √(m_1 ψ_n) / m_2^{ρ/2}`.
//!
//! None of the limits (`Z_∞`, `ψ_∞`) is observable; functions that need one
//! take it as an argument.

use serde::{Deserialize, Serialize};

use crate::math::{fabs, log, log1p, pow, sqrt};
use crate::urn::{Color, DrawRecord, LawPair, UrnState};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("proportion Z_n = {z} is numerically extreme; statistics undefined")]
    Degenerate { z: f64 },
    #[error("mixing scale vanished (σ̃ = {scale}); normalization undefined")]
    DegenerateScale { scale: f64 },
    #[error("reinforcement means ({m1}, {m2}) do not fit this regime")]
    RegimeMismatch { m1: f64, m2: f64 },
    #[error("iterated-log normalization needs n >= 16, got {n}")]
    HorizonTooShort { n: u64 },
    #[error("dense path covers steps 0..={available}, need 0..={requested}")]
    PathTooShort { requested: u64, available: u64 },
}

// ---------------------------------------------------------------------------
// Scalar formulas
// ---------------------------------------------------------------------------

/// `σ̃(z)` for normalized second moments `(s1, s2)`.
#[inline]
pub fn sigma_tilde(z: f64, s1: f64, s2: f64) -> f64 {
    sqrt(z * (1.0 - z)) * sqrt((1.0 - z) * s1 + z * s2)
}

/// `H(z) = σ_1²/z + σ_2²/(1−z)`.
#[inline]
pub fn time_scale(z: f64, s1: f64, s2: f64) -> f64 {
    s1 / z + s2 / (1.0 - z)
}

/// `h(z)`, the scale of the draw-proportion fluctuations.
#[inline]
pub fn draw_count_scale(z: f64, s1: f64, s2: f64) -> f64 {
    sqrt(z * (1.0 - z)) * sqrt((1.0 - z) * (2.0 * s1 - 1.0) + z * (2.0 * s2 - 1.0))
}

/// `ψ = y1 / y2^ρ`.
#[inline]
pub fn psi(y1: f64, y2: f64, rho: f64) -> f64 {
    if rho == 1.0 {
        y1 / y2
    } else {
        y1 / pow(y2, rho)
    }
}

/// `Q = log(y1)/m1 − log(y2)/m2`.
#[inline]
pub fn log_ratio(y1: f64, y2: f64, m1: f64, m2: f64) -> f64 {
    log(y1) / m1 - log(y2) / m2
}

/// `f(x) = x − log(1+x)`, with `0 ≤ f(x) ≤ x²` on `x ≥ 0`.
#[inline]
pub fn log_gap(x: f64) -> f64 {
    x - log1p(x)
}

/// `A_{n,k}`; zero before the first draw of that color (empty sum).
pub fn residual(state: &UrnState, color: Color) -> f64 {
    match state.draws(color) {
        0 => 0.0,
        n => state.centered_sum(color) / n as f64,
    }
}

// ---------------------------------------------------------------------------
// Equal-mean statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualMeanStats {
    pub z: f64,
    pub sigma_tilde: f64,
    pub time_scale: f64,
    pub draw_count_scale: f64,
    pub a1: f64,
    pub a2: f64,
}

fn check_proportion(z: f64) -> Result<(), StatsError> {
    if z > 0.0 && z < 1.0 {
        Ok(())
    } else {
        Err(StatsError::Degenerate { z })
    }
}

pub fn equal_mean_stats(state: &UrnState, laws: &LawPair) -> Result<EqualMeanStats, StatsError> {
    let (m1, m2) = laws.means();
    if m1 != m2 {
        return Err(StatsError::RegimeMismatch { m1, m2 });
    }
    let z = state.z();
    check_proportion(z)?;
    let (s1, s2) = laws.sigma2();
    Ok(EqualMeanStats {
        z,
        sigma_tilde: sigma_tilde(z, s1, s2),
        time_scale: time_scale(z, s1, s2),
        draw_count_scale: draw_count_scale(z, s1, s2),
        a1: residual(state, Color::One),
        a2: residual(state, Color::Two),
    })
}

// ---------------------------------------------------------------------------
// Unequal-mean statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnequalMeanStats {
    pub rho: f64,
    pub psi: f64,
    pub log_ratio: f64,
    pub eta_hat: f64,
    pub pivot_scale: f64,
}

/// `η̂ = ψ m_2^ρ / m_1`.
#[inline]
pub fn eta_from_psi(psi: f64, m1: f64, m2: f64, rho: f64) -> f64 {
    psi * pow(m2, rho) / m1
}

/// `s = σ_1 √(m_1 ψ) / m_2^{ρ/2}`.
#[inline]
pub fn psi_pivot_scale(psi: f64, sigma1_sq: f64, m1: f64, m2: f64, rho: f64) -> f64 {
    sqrt(sigma1_sq) * sqrt(m1 * psi) / pow(m2, rho / 2.0)
}

pub fn unequal_mean_stats(
    state: &UrnState,
    laws: &LawPair,
) -> Result<UnequalMeanStats, StatsError> {
    let (m1, m2) = laws.means();
    if !(m1 < m2) {
        return Err(StatsError::RegimeMismatch { m1, m2 });
    }
    let rho = m1 / m2;
    let (y1, y2) = (state.y1(), state.y2());
    let psi = psi(y1, y2, rho);
    Ok(UnequalMeanStats {
        rho,
        psi,
        log_ratio: log_ratio(y1, y2, m1, m2),
        eta_hat: eta_from_psi(psi, m1, m2, rho),
        pivot_scale: psi_pivot_scale(psi, laws.first().sigma2(), m1, m2, rho),
    })
}

// ---------------------------------------------------------------------------
// Log-ratio decomposition
// ---------------------------------------------------------------------------

/// Split of one log-ratio increment `ΔQ_n` into a martingale-difference part
/// and a nonnegative-curvature drift part.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QIncrement {
    pub martingale: f64,
    pub drift: f64,
}

impl QIncrement {
    pub fn total(&self) -> f64 {
        self.martingale + self.drift
    }
}

/// Decomposes the step `record` taken from `prior`.
pub fn q_increment(record: &DrawRecord, prior: &UrnState, laws: &LawPair) -> QIncrement {
    let m = laws.get(record.color).mean();
    let y = prior.mass(record.color);
    let x = record.reinforcement / y;
    let sign = match record.color {
        Color::One => 1.0,
        Color::Two => -1.0,
    };
    QIncrement {
        martingale: sign * x / m,
        drift: -sign * log_gap(x) / m,
    }
}

/// Running sums of the two parts of the decomposition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QDecomposition {
    martingale: crate::accum::CompensatedSum,
    drift: crate::accum::CompensatedSum,
}

impl QDecomposition {
    pub fn push(&mut self, inc: QIncrement) {
        self.martingale.add(inc.martingale);
        self.drift.add(inc.drift);
    }

    pub fn martingale(&self) -> f64 {
        self.martingale.value()
    }

    pub fn drift(&self) -> f64 {
        self.drift.value()
    }

    pub fn total(&self) -> f64 {
        self.martingale() + self.drift()
    }
}

// ---------------------------------------------------------------------------
// Bridge functionals and iterated-log normalization
// ---------------------------------------------------------------------------

/// One-sided bridge maximum `max_{0≤l≤n} l(Z_l − Z_n) / (σ̃_n √n)`.
///
/// `z_path[l]` holds `Z_l` for `l = 0..=n`.
pub fn bridge_max(z_path: &[f64], n: u64, sigma_tilde_n: f64) -> Result<f64, StatsError> {
    bridge_max_impl(z_path, n, sigma_tilde_n, 1.0, false)
}

/// Two-sided variant `max_l |l(Z_l − Z_n)| / (σ̃_n √n)`. Reported only.
pub fn bridge_max_two_sided(
    z_path: &[f64],
    n: u64,
    sigma_tilde_n: f64,
) -> Result<f64, StatsError> {
    bridge_max_impl(z_path, n, sigma_tilde_n, 1.0, true)
}

/// Unequal-mean bridge maximum `max_{0≤l≤n} l^ρ(ψ_l − ψ_n) / norm` where
/// `norm` is the caller's scale (see [`unequal_bridge_scale`]).
pub fn bridge_max_weighted(
    psi_path: &[f64],
    n: u64,
    rho: f64,
    norm: f64,
    two_sided: bool,
) -> Result<f64, StatsError> {
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(StatsError::DegenerateScale { scale: norm });
    }
    let need = n as usize;
    if psi_path.len() <= need {
        return Err(StatsError::PathTooShort {
            requested: n,
            available: psi_path.len() as u64 - 1,
        });
    }
    let end = psi_path[need];
    let mut best = 0.0_f64;
    for (l, &v) in psi_path[..=need].iter().enumerate().skip(1) {
        let w = if rho == 1.0 { l as f64 } else { pow(l as f64, rho) };
        let d = w * (v - end);
        let d = if two_sided { fabs(d) } else { d };
        if d > best {
            best = d;
        }
    }
    Ok(best / norm)
}

fn bridge_max_impl(
    path: &[f64],
    n: u64,
    sigma_tilde_n: f64,
    rho: f64,
    two_sided: bool,
) -> Result<f64, StatsError> {
    if !(sigma_tilde_n > 0.0) {
        return Err(StatsError::DegenerateScale { scale: sigma_tilde_n });
    }
    bridge_max_weighted(path, n, rho, sigma_tilde_n * sqrt(n as f64), two_sided)
}

/// Normalizer for the unequal-mean bridge: `σ_1 √N_{n,1} · m_1 / m_2^ρ`.
///
/// The factor `m_1/m_2^ρ` makes the scale agree with the variance of
/// `ψ_n − ψ_∞`; it is 1 whenever `m_1 = m_2^ρ`.
pub fn unequal_bridge_scale(sigma1_sq: f64, n1: u64, m1: f64, m2: f64, rho: f64) -> f64 {
    sqrt(sigma1_sq) * sqrt(n1 as f64) * m1 / pow(m2, rho)
}

/// `√(2 log log n)`.
#[inline]
pub fn lil_denominator(n: f64) -> f64 {
    sqrt(2.0 * log(log(n)))
}

/// `√n (Z_n − z_limit) / √(2 log log n)`.
pub fn lil_normalized(n: u64, z_n: f64, z_limit: f64) -> Result<f64, StatsError> {
    if n < 16 {
        return Err(StatsError::HorizonTooShort { n });
    }
    let nf = n as f64;
    Ok(sqrt(nf) * (z_n - z_limit) / lil_denominator(nf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::ReinforcementLaw;
    use crate::rng::{stream, Domain};
    use alloc::vec::Vec;

    fn pair(a: ReinforcementLaw, b: ReinforcementLaw) -> LawPair {
        LawPair::new(a, b)
    }

    #[test]
    fn equal_mean_plug_ins() {
        let laws = pair(
            ReinforcementLaw::constant(1.0).unwrap(),
            ReinforcementLaw::constant(1.0).unwrap(),
        );
        let s = equal_mean_stats(&UrnState::new(3.0, 3.0).unwrap(), &laws).unwrap();
        assert_eq!(s.z, 0.5);
        assert_eq!(s.sigma_tilde, 0.5);
        assert_eq!(s.time_scale, 4.0);
        assert_eq!(s.draw_count_scale, 0.5);

        let laws = pair(
            ReinforcementLaw::two_point(0.0, 2.0, 0.5).unwrap(),
            ReinforcementLaw::two_point(0.0, 2.0, 0.5).unwrap(),
        );
        let s = equal_mean_stats(&UrnState::new(1.0, 1.0).unwrap(), &laws).unwrap();
        assert!((s.sigma_tilde - sqrt(2.0) / 2.0).abs() < 1e-15);
        assert!((s.draw_count_scale - sqrt(3.0) / 2.0).abs() < 1e-15);
        assert_eq!(s.time_scale, 8.0);
    }

    #[test]
    fn constant_reinforcement_collapses_scales() {
        for z in [0.1, 0.3, 0.77] {
            assert_eq!(sigma_tilde(z, 1.0, 1.0), sqrt(z * (1.0 - z)));
            assert_eq!(draw_count_scale(z, 1.0, 1.0), sigma_tilde(z, 1.0, 1.0));
        }
    }

    #[test]
    fn equal_stats_reject_unequal_means() {
        let laws = pair(
            ReinforcementLaw::constant(1.0).unwrap(),
            ReinforcementLaw::constant(2.0).unwrap(),
        );
        assert!(matches!(
            equal_mean_stats(&UrnState::new(1.0, 1.0).unwrap(), &laws),
            Err(StatsError::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn extreme_proportion_is_degenerate() {
        let laws = pair(
            ReinforcementLaw::constant(1.0).unwrap(),
            ReinforcementLaw::constant(1.0).unwrap(),
        );
        let s = UrnState::new(1.0, 1e-300).unwrap();
        assert!(matches!(equal_mean_stats(&s, &laws), Err(StatsError::Degenerate { .. })));
    }

    #[test]
    fn unequal_mean_plug_ins() {
        let laws = pair(
            ReinforcementLaw::constant(1.0).unwrap(),
            ReinforcementLaw::constant(2.0).unwrap(),
        );
        let e = core::f64::consts::E;
        let s = unequal_mean_stats(&UrnState::new(e, e).unwrap(), &laws).unwrap();
        assert_eq!(s.rho, 0.5);
        assert!((s.log_ratio - 0.5).abs() < 1e-15);
        assert!((s.log_ratio - log(s.psi) / 1.0).abs() < 1e-15);

        let s = unequal_mean_stats(&UrnState::new(1.0, 1.0).unwrap(), &laws).unwrap();
        assert_eq!(s.psi, 1.0);
        assert!((s.pivot_scale - 0.840_896_415_253_714_6).abs() < 1e-12);
        assert!((s.eta_hat - sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn psi_matches_odds_when_means_equal() {
        for (y1, y2) in [(1.0, 3.0), (7.5, 2.5)] {
            let z: f64 = y1 / (y1 + y2);
            assert!((psi(y1, y2, 1.0) - z / (1.0 - z)).abs() < 1e-15);
        }
    }

    #[test]
    fn q_increment_edge_cases() {
        let laws = pair(
            ReinforcementLaw::two_point(0.0, 1.0, 0.5).unwrap(),
            ReinforcementLaw::two_point(0.0, 4.0, 0.5).unwrap(),
        );
        let prior = UrnState::new(0.5, 1.0).unwrap();
        let zero = q_increment(
            &DrawRecord { step: 1, color: Color::Two, reinforcement: 0.0 },
            &prior,
            &laws,
        );
        assert_eq!(zero.total(), 0.0);

        // color 1, U/Y = 1, m_1 = 1 (law mean is 0.5 here, so use a unit-mean pair)
        let laws = pair(
            ReinforcementLaw::constant(1.0).unwrap(),
            ReinforcementLaw::constant(2.0).unwrap(),
        );
        let prior = UrnState::new(1.0, 1.0).unwrap();
        let inc = q_increment(
            &DrawRecord { step: 1, color: Color::One, reinforcement: 1.0 },
            &prior,
            &laws,
        );
        assert_eq!(inc.martingale, 1.0);
        assert!((inc.drift + (1.0 - core::f64::consts::LN_2)).abs() < 1e-15);
        assert!((inc.total() - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn q_decomposition_telescopes_over_a_long_run() {
        let laws = pair(
            ReinforcementLaw::two_point(1.0, 3.0, 0.5).unwrap(),
            ReinforcementLaw::two_point(2.0, 6.0, 0.5).unwrap(),
        );
        let (m1, m2) = laws.means();
        let mut state = UrnState::new(1.0, 1.0).unwrap();
        let q0 = log_ratio(state.y1(), state.y2(), m1, m2);
        let mut dec = QDecomposition::default();
        let mut rng = stream(3, Domain::Oracle, 0);
        for _ in 0..1_000_000 {
            let prior = state;
            let rec = state.step(&laws, &mut rng);
            let inc = q_increment(&rec, &prior, &laws);
            let x = rec.reinforcement / prior.mass(rec.color);
            let m = laws.get(rec.color).mean();
            assert!(fabs(inc.drift) <= x * x / m + 1e-300);
            dec.push(inc);
        }
        let q = log_ratio(state.y1(), state.y2(), m1, m2);
        assert!(fabs(q - (q0 + dec.total())) < 1e-9, "{} vs {}", q, q0 + dec.total());
    }

    #[test]
    fn sigma_tilde_derivative_matches_finite_difference() {
        // d/dz of √(z(1−z)) √((1−z)s1 + z s2), differentiated by hand.
        let (s1, s2) = (2.0, 1.25);
        for z in [0.2, 0.5, 0.8] {
            let g = z * (1.0 - z);
            let k = (1.0 - z) * s1 + z * s2;
            let deriv = (1.0 - 2.0 * z) / (2.0 * sqrt(g)) * sqrt(k) + sqrt(g) * (s2 - s1) / (2.0 * sqrt(k));
            let dz = 1e-6;
            let fd = sigma_tilde(z + dz, s1, s2) - sigma_tilde(z, s1, s2);
            assert!(fabs(fd - deriv * dz) < 1e-9);
            // H' = -s1/z² + s2/(1-z)²
            let hd = -s1 / (z * z) + s2 / ((1.0 - z) * (1.0 - z));
            let fd = time_scale(z + dz, s1, s2) - time_scale(z, s1, s2);
            assert!(fabs(fd - hd * dz) < 1e-9 * (1.0 + fabs(hd)));
        }
    }

    #[test]
    fn time_scale_lower_bound() {
        for i in 1..100 {
            let z = i as f64 / 100.0;
            let (s1, s2) = (2.0, 1.3);
            assert!(time_scale(z, s1, s2) >= (sqrt(s1) + sqrt(s2)).powi(2) - 1e-12);
            assert!(sigma_tilde(z, s1, s2) <= sqrt(s1).max(sqrt(s2)) / 2.0 + 1e-15);
        }
    }

    #[test]
    fn bridge_of_constant_path_is_zero() {
        let path: Vec<f64> = alloc::vec![0.3; 101];
        assert_eq!(bridge_max(&path, 100, 0.4).unwrap(), 0.0);
        assert_eq!(bridge_max_weighted(&path, 100, 0.5, 1.0, false).unwrap(), 0.0);
    }

    #[test]
    fn bridge_two_sided_is_color_symmetric() {
        let mut rng = stream(1, Domain::Oracle, 9);
        let laws = pair(
            ReinforcementLaw::two_point(0.0, 2.0, 0.5).unwrap(),
            ReinforcementLaw::two_point(0.0, 2.0, 0.5).unwrap(),
        );
        let mut s = UrnState::new(1.0, 1.0).unwrap();
        let mut path = alloc::vec![s.z()];
        for _ in 0..500 {
            s.step(&laws, &mut rng);
            path.push(s.z());
        }
        let swapped: Vec<f64> = path.iter().map(|z| 1.0 - z).collect();
        let st = sigma_tilde(s.z(), 2.0, 2.0);
        let a = bridge_max_two_sided(&path, 500, st).unwrap();
        let b = bridge_max_two_sided(&swapped, 500, st).unwrap();
        assert!(fabs(a - b) < 1e-12);
        let one = bridge_max(&path, 500, st).unwrap();
        assert!(one <= a);
    }

    #[test]
    fn bridge_weights_reduce_to_linear_at_rho_one() {
        let path = [0.0, 0.2, 0.1, 0.4, 0.3];
        // weights l: 1*(0.2-0.3), 2*(0.1-0.3), 3*(0.4-0.3) → max 0.3
        let v = bridge_max_weighted(&path, 4, 1.0, 1.0, false).unwrap();
        assert!(fabs(v - 0.3) < 1e-15);
        assert!(bridge_max_weighted(&path, 9, 1.0, 1.0, false).is_err());
    }

    #[test]
    fn lil_normalization() {
        assert_eq!(lil_normalized(100, 0.3, 0.3).unwrap(), 0.0);
        let ee = libm::exp(core::f64::consts::E);
        assert!(fabs(lil_denominator(ee) - sqrt(2.0)) < 1e-15);
        assert!(matches!(lil_normalized(15, 0.3, 0.2), Err(StatsError::HorizonTooShort { n: 15 })));
    }
}

//! Exit-pair embedding of centered finite laws into Brownian motion.
//!
//! A target law `F` with atoms on both sides of zero is realized as `B(τ)`:
//! with probability `F{0}` stop at once, otherwise pick a pair `u < 0 < v`
//! with probability `(v − u) F{u} F{v} / c`, `c = E[X⁺]`, and run `B` until
//! it leaves `(u, v)`. The exit side is drawn exactly (`v` with probability
//! `|u|/(v − u)`); only `τ` comes from a discretized path, which is resampled
//! until it leaves on the drawn side.
//!
//! [`urn`] builds the conditional law of each urn martingale increment and
//! drives the urn with the embedded draws.

pub mod urn;

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::math::{exp, fabs, sqrt};

pub use urn::{
    embed_martingale, equal_mean_increment, equal_mean_variance, unequal_mean_increment,
    unequal_mean_variance, time_scale_ratio, verify_time_scale, EmbeddedPath, IncrementLaw, TimeScaleReport,
};

/// Input probabilities may miss 1 by this much before renormalization.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;
/// `|mean|` allowed before recentering, relative to the largest `|value|`.
pub const CENTERING_TOLERANCE: f64 = 1e-9;
/// Relative distance under which values are merged or snapped to zero.
pub const SNAP_TOLERANCE: f64 = 1e-12;
/// Finest path step is `min(|u|, v)² / STEPS_PER_SCALE`.
pub const STEPS_PER_SCALE: f64 = 400.0;
/// Bridge crossing correction is skipped once `d·d′ > CROSSING_CUTOFF · h`.
const CROSSING_CUTOFF: f64 = 20.0;
/// Away from the barriers the step is `BULK_STEP · d²`.
const BULK_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SkorokhodError {
    #[error("the law has no atoms")]
    Empty,
    #[error("atom {index} has a non-finite value or probability")]
    NonFinite { index: usize },
    #[error("atom {index} has negative probability {probability}")]
    NegativeProbability { index: usize, probability: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    ProbabilitySum { sum: f64 },
    #[error("mean {mean} is not zero")]
    NotCentered { mean: f64 },
    #[error("reinforcement law of color {color} has no finite support")]
    Unsupported { color: u8 },
    #[error("increment law undefined at step {step}: {reason}")]
    Increment { step: u64, reason: &'static str },
}

/// One atom of a [`CenteredFiniteLaw`] and the input entries merged into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub probability: f64,
    /// `(input index, probability)` of every input entry at this value.
    pub sources: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
struct Pair {
    lo: usize,
    hi: usize,
    cumulative: f64,
}

/// A mean-zero law on finitely many points.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredFiniteLaw {
    atoms: Vec<Atom>,
    zero: Option<usize>,
    second_moment: f64,
    pairs: Vec<Pair>,
}

impl CenteredFiniteLaw {
    /// Validates `(value, probability)` entries, renormalizes, recenters,
    /// snaps values within [`SNAP_TOLERANCE`] of zero and merges equal values.
    /// Zero-probability entries are dropped.
    pub fn new(entries: &[(f64, f64)]) -> Result<Self, SkorokhodError> {
        let mut total = 0.0;
        let mut scale: f64 = 0.0;
        for (index, &(v, p)) in entries.iter().enumerate() {
            if !v.is_finite() || !p.is_finite() {
                return Err(SkorokhodError::NonFinite { index });
            }
            if p < 0.0 {
                return Err(SkorokhodError::NegativeProbability { index, probability: p });
            }
            total += p;
            if p > 0.0 {
                scale = scale.max(fabs(v));
            }
        }
        if entries.iter().all(|e| e.1 == 0.0) {
            return Err(SkorokhodError::Empty);
        }
        if fabs(total - 1.0) > PROBABILITY_TOLERANCE {
            return Err(SkorokhodError::ProbabilitySum { sum: total });
        }
        let mean: f64 = entries.iter().map(|&(v, p)| v * p / total).sum();
        if fabs(mean) > CENTERING_TOLERANCE * scale {
            return Err(SkorokhodError::NotCentered { mean });
        }

        let mut raw: Vec<(f64, usize, f64)> = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.1 > 0.0)
            .map(|(i, &(v, p))| {
                let c = v - mean;
                (if fabs(c) <= SNAP_TOLERANCE * scale { 0.0 } else { c }, i, p / total)
            })
            .collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<Atom> = Vec::new();
        for (v, i, p) in raw {
            match atoms.last_mut() {
                Some(last) if fabs(last.value - v) <= SNAP_TOLERANCE * scale && (last.value == 0.0) == (v == 0.0) => {
                    last.probability += p;
                    last.sources.push((i, p));
                }
                _ => atoms.push(Atom { value: v, probability: p, sources: alloc::vec![(i, p)] }),
            }
        }
        // Recentering can leave O(ulp) residue; fold it into the outermost atoms.
        let residue: f64 = atoms.iter().map(|a| a.value * a.probability).sum();
        if residue != 0.0 && atoms.len() > 1 {
            let k = if residue > 0.0 { atoms.len() - 1 } else { 0 };
            if atoms[k].value != 0.0 {
                atoms[k].value -= residue / atoms[k].probability;
            }
        }
        Ok(Self::from_atoms(atoms))
    }

    fn from_atoms(atoms: Vec<Atom>) -> Self {
        let zero = atoms.iter().position(|a| a.value == 0.0);
        let second_moment = atoms.iter().map(|a| a.value * a.value * a.probability).sum();
        let c: f64 = atoms.iter().filter(|a| a.value > 0.0).map(|a| a.value * a.probability).sum();
        let mut pairs = Vec::new();
        let mut cumulative = zero.map_or(0.0, |z| atoms[z].probability);
        for (lo, a) in atoms.iter().enumerate().filter(|(_, a)| a.value < 0.0) {
            for (hi, b) in atoms.iter().enumerate().filter(|(_, b)| b.value > 0.0) {
                cumulative += (b.value - a.value) * a.probability * b.probability / c;
                pairs.push(Pair { lo, hi, cumulative });
            }
        }
        Self { atoms, zero, second_moment, pairs }
    }

    /// Atoms sorted by value.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `Σ value² · probability`, the expected stopping time.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn is_zero(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Index of the atom at zero, if any.
    pub fn zero_atom(&self) -> Option<usize> {
        self.zero
    }

    /// Picks one of the input entries merged into `atom`, in proportion to
    /// their probabilities.
    pub fn sample_source<R: Rng + ?Sized>(&self, atom: usize, rng: &mut R) -> usize {
        let a = &self.atoms[atom];
        if a.sources.len() == 1 {
            return a.sources[0].0;
        }
        let mut x = rng.random::<f64>() * a.probability;
        for &(i, p) in &a.sources {
            if x < p {
                return i;
            }
            x -= p;
        }
        a.sources[a.sources.len() - 1].0
    }

    /// `None` for an immediate stop at zero, else the exit pair.
    fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(usize, usize)> {
        let end = self.pairs.last().map_or(1.0, |p| p.cumulative);
        let x = rng.random::<f64>() * end;
        if self.zero.is_some() && x < self.atoms[self.zero.unwrap()].probability {
            return None;
        }
        let k = self.pairs.partition_point(|p| p.cumulative <= x).min(self.pairs.len() - 1);
        Some((self.pairs[k].lo, self.pairs[k].hi))
    }
}

/// One embedded draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    /// `B(τ)`, an atom of the target law.
    pub value: f64,
    /// Index of that atom in [`CenteredFiniteLaw::atoms`].
    pub atom: usize,
    pub tau: f64,
    /// Finest path step; 0 for an immediate stop.
    pub dt: f64,
    /// Paths simulated until one left on the drawn side.
    pub attempts: u32,
}

/// Embeds one draw from `law`.
pub fn embed_increment<R: Rng + ?Sized>(law: &CenteredFiniteLaw, rng: &mut R) -> EmbeddingResult {
    let Some((lo, hi)) = (if law.is_zero() { None } else { law.sample_pair(rng) }) else {
        let atom = law.zero.unwrap_or(0);
        return EmbeddingResult { value: 0.0, atom, tau: 0.0, dt: 0.0, attempts: 0 };
    };
    let (u, v) = (law.atoms[lo].value, law.atoms[hi].value);
    let upper = rng.random::<f64>() * (v - u) < -u;
    let dt = sqr(fabs(u).min(v)) / STEPS_PER_SCALE;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let (side, tau) = exit_time(u, v, dt, rng);
        if side == upper {
            let atom = if upper { hi } else { lo };
            return EmbeddingResult { value: law.atoms[atom].value, atom, tau, dt, attempts };
        }
    }
}

#[inline]
fn sqr(x: f64) -> f64 {
    x * x
}

/// First exit of `B` from `(u, v)`. Steps are `max(dt, (d / 10)²)` with `d`
/// the distance to the nearer barrier, so `dt` is the step next to a barrier;
/// the bridge crossing probability `exp(−2 d d′ / h)` is tested between grid
/// points. Returns `(left through v, exit time)`, the time being the midpoint
/// of the exit step.
fn exit_time<R: Rng + ?Sized>(u: f64, v: f64, dt: f64, rng: &mut R) -> (bool, f64) {
    let mut x = 0.0;
    let mut t = 0.0;
    loop {
        let d = (x - u).min(v - x);
        let h = dt.max(d * d * BULK_STEP);
        let z: f64 = rng.sample(StandardNormal);
        let next = x + sqrt(h) * z;
        t += h;
        if next >= v {
            return (true, t - 0.5 * h);
        }
        if next <= u {
            return (false, t - 0.5 * h);
        }
        let cutoff = CROSSING_CUTOFF * h;
        let up = (v - x) * (v - next);
        if up <= cutoff && rng.random::<f64>() < exp(-2.0 * up / h) {
            return (true, t - 0.5 * h);
        }
        let down = (x - u) * (next - u);
        if down <= cutoff && rng.random::<f64>() < exp(-2.0 * down / h) {
            return (false, t - 0.5 * h);
        }
        x = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn law(entries: &[(f64, f64)]) -> CenteredFiniteLaw {
        CenteredFiniteLaw::new(entries).unwrap()
    }

    #[test]
    fn rejects_bad_laws() {
        assert_eq!(CenteredFiniteLaw::new(&[]), Err(SkorokhodError::Empty));
        assert!(matches!(
            CenteredFiniteLaw::new(&[(1.0, 1.0)]),
            Err(SkorokhodError::NotCentered { .. })
        ));
        assert!(matches!(
            CenteredFiniteLaw::new(&[(-1.0, 0.5), (1.0, 0.4)]),
            Err(SkorokhodError::ProbabilitySum { .. })
        ));
        assert!(matches!(
            CenteredFiniteLaw::new(&[(-1.0, 1.5), (1.0, -0.5)]),
            Err(SkorokhodError::NegativeProbability { index: 1, .. })
        ));
        assert!(matches!(
            CenteredFiniteLaw::new(&[(f64::NAN, 1.0)]),
            Err(SkorokhodError::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn merges_and_recenters() {
        let l = law(&[(-1.0, 0.25), (2.0, 0.25), (-1.0, 0.25), (0.0, 0.25)]);
        assert_eq!(l.atoms().len(), 3);
        assert_eq!(l.atoms()[0].sources, alloc::vec![(0, 0.25), (2, 0.25)]);
        assert_eq!(l.zero_atom(), Some(1));
        assert!((l.second_moment() - 1.5).abs() < 1e-15);

        let tiny = law(&[(-1.0, 0.5), (1.0 + 1e-12, 0.5)]);
        let mean: f64 = tiny.atoms().iter().map(|a| a.value * a.probability).sum();
        assert!(mean.abs() < 1e-15);
    }

    #[test]
    fn pair_weights_sum_to_one() {
        let l = law(&[(-2.0, 0.2), (-1.0, 0.2), (0.0, 0.2), (1.0, 0.2), (2.0, 0.2)]);
        assert!((l.pairs.last().unwrap().cumulative - 1.0).abs() < 1e-12);
        // P(pair) · P(side | pair), summed over pairs, recovers every atom.
        let c = 0.6;
        let mut mass = [0.0; 5];
        mass[2] = 0.2;
        for p in &l.pairs {
            let (u, v) = (l.atoms[p.lo].value, l.atoms[p.hi].value);
            let w = (v - u) * l.atoms[p.lo].probability * l.atoms[p.hi].probability / c;
            mass[p.hi] += w * (-u) / (v - u);
            mass[p.lo] += w * v / (v - u);
        }
        for m in mass {
            assert!((m - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_law_stops_at_once() {
        let l = law(&[(0.0, 1.0)]);
        let r = embed_increment(&l, &mut stream(1, Domain::Embedding, 0));
        assert_eq!((r.value, r.tau, r.attempts), (0.0, 0.0, 0));
    }

    #[test]
    fn symmetric_two_point() {
        let l = law(&[(-1.0, 0.5), (1.0, 0.5)]);
        let mut rng = stream(2, Domain::Embedding, 0);
        let n = 100_000;
        let (mut up, mut tau) = (0u32, 0.0);
        for _ in 0..n {
            let r = embed_increment(&l, &mut rng);
            assert!(r.value == 1.0 || r.value == -1.0);
            assert!(r.tau > 0.0);
            up += (r.value > 0.0) as u32;
            tau += r.tau;
        }
        let sd = (0.25 / n as f64).sqrt();
        assert!((up as f64 / n as f64 - 0.5).abs() < 4.0 * sd);
        // Exit time of (−1, 1) has mean 1 and variance 2/3.
        let mean = tau / n as f64;
        assert!((mean - 1.0).abs() < 4.0 * (2.0 / 3.0 / n as f64).sqrt() + 0.005, "{mean}");
    }

    #[test]
    fn asymmetric_two_point() {
        let (a, b) = (1.0, 3.0);
        let l = law(&[(-a, b / (a + b)), (b, a / (a + b))]);
        let mut rng = stream(3, Domain::Embedding, 0);
        let n = 40_000;
        let (mut up, mut tau) = (0u32, 0.0);
        for _ in 0..n {
            let r = embed_increment(&l, &mut rng);
            up += (r.value == b) as u32;
            tau += r.tau;
        }
        let p = a / (a + b);
        assert!((up as f64 / n as f64 - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        assert!((tau / n as f64 / (a * b) - 1.0).abs() < 0.02);
    }

    #[test]
    fn chi_square_four_atoms() {
        let l = law(&[(-3.0, 0.1), (-1.0, 0.4), (0.0, 0.2), (1.0, 0.2), (5.0, 0.1)]);
        let mut rng = stream(4, Domain::Embedding, 0);
        let n = 100_000;
        let mut counts = alloc::vec![0u64; l.atoms().len()];
        let mut tau = 0.0;
        for _ in 0..n {
            let r = embed_increment(&l, &mut rng);
            counts[r.atom] += 1;
            tau += r.tau;
        }
        let chi2: f64 = l
            .atoms()
            .iter()
            .zip(&counts)
            .map(|(a, &c)| {
                let e = a.probability * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 99% quantile of chi-square with 4 degrees of freedom.
        assert!(chi2 < 13.277, "{chi2}");
        assert!((tau / n as f64 / l.second_moment() - 1.0).abs() < 0.02);
    }
}

//! The two-color urn: state, draw probabilities, and a single step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::law::ReinforcementLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    One,
    Two,
}

impl Color {
    pub fn index(self) -> usize {
        match self {
            Color::One => 0,
            Color::Two => 1,
        }
    }

    #[inline]
    pub fn from_index(k: usize) -> Self {
        if k == 0 {
            Color::One
        } else {
            Color::Two
        }
    }
}

/// Whether the two reinforcement means coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    EqualMean,
    UnequalMean,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UrnError {
    #[error("initial mass for color {color} must be positive and finite, got {value}")]
    InitialMass { color: u8, value: f64 },
    #[error("reinforcement {value} for color {color} is negative or not finite")]
    Reinforcement { color: u8, value: f64 },
    #[error("ball mass left the finite range at step {step} (y1 = {y1}, y2 = {y2})")]
    MassOverflow { step: u64, y1: f64, y2: f64 },
}

/// The pair of reinforcement laws (μ_1, μ_2).
#[derive(Debug, Clone)]
pub struct LawPair {
    laws: [ReinforcementLaw; 2],
}

impl LawPair {
    pub fn new(first: ReinforcementLaw, second: ReinforcementLaw) -> Self {
        Self { laws: [first, second] }
    }

    pub fn get(&self, color: Color) -> &ReinforcementLaw {
        &self.laws[color.index()]
    }

    pub fn first(&self) -> &ReinforcementLaw {
        &self.laws[0]
    }

    pub fn second(&self) -> &ReinforcementLaw {
        &self.laws[1]
    }

    pub fn means(&self) -> (f64, f64) {
        (self.laws[0].mean(), self.laws[1].mean())
    }

    pub fn sigma2(&self) -> (f64, f64) {
        (self.laws[0].sigma2(), self.laws[1].sigma2())
    }

    /// `ρ = m_1 / m_2`; exactly 1 in the equal-mean regime.
    pub fn rho(&self) -> f64 {
        let (m1, m2) = self.means();
        if m1 == m2 {
            1.0
        } else {
            m1 / m2
        }
    }

    pub fn regime(&self) -> Regime {
        let (m1, m2) = self.means();
        if m1 == m2 {
            Regime::EqualMean
        } else {
            Regime::UnequalMean
        }
    }
}

/// One draw: which color came out and how many balls were added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub step: u64,
    pub color: Color,
    pub reinforcement: f64,
}

/// Ball masses `(Y_{n,1}, Y_{n,2})` with draw counters and the centered
/// reinforcement sums `Σ X_{l,k}(U_{l,k}/m_k − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnState {
    mass: [CompensatedSum; 2],
    draws: [u64; 2],
    centered: [CompensatedSum; 2],
}

impl UrnState {
    pub fn new(y1: f64, y2: f64) -> Result<Self, UrnError> {
        for (color, value) in [(1u8, y1), (2u8, y2)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(UrnError::InitialMass { color, value });
            }
        }
        Ok(Self {
            mass: [CompensatedSum::new(y1), CompensatedSum::new(y2)],
            draws: [0, 0],
            centered: [CompensatedSum::default(); 2],
        })
    }

    #[inline]
    pub fn y1(&self) -> f64 {
        self.mass[0].value()
    }

    #[inline]
    pub fn y2(&self) -> f64 {
        self.mass[1].value()
    }

    #[inline]
    pub fn mass(&self, color: Color) -> f64 {
        self.mass[color.index()].value()
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.y1() + self.y2()
    }

    /// Number of draws so far.
    #[inline]
    pub fn n(&self) -> u64 {
        self.draws[0] + self.draws[1]
    }

    #[inline]
    pub fn n1(&self) -> u64 {
        self.draws[0]
    }

    #[inline]
    pub fn n2(&self) -> u64 {
        self.draws[1]
    }

    pub fn draws(&self, color: Color) -> u64 {
        self.draws[color.index()]
    }

    /// `Σ_l X_{l,k}(U_{l,k}/m_k − 1)` for color `k`.
    pub fn centered_sum(&self, color: Color) -> f64 {
        self.centered[color.index()].value()
    }

    /// `Z_n = Y_{n,1} / |Y_n|`.
    #[inline]
    pub fn z(&self) -> f64 {
        let y1 = self.y1();
        y1 / (y1 + self.y2())
    }

    /// `(p_{n+1,1}, p_{n+1,2}) = (Y_{n,1}, Y_{n,2}) / |Y_n|`.
    pub fn draw_probability(&self) -> (f64, f64) {
        let (y1, y2) = (self.y1(), self.y2());
        let total = y1 + y2;
        (y1 / total, y2 / total)
    }

    /// Applies a given draw: adds `reinforcement` balls of `color`.
    pub fn apply(
        &mut self,
        color: Color,
        reinforcement: f64,
        laws: &LawPair,
    ) -> Result<DrawRecord, UrnError> {
        if !(reinforcement >= 0.0) || !reinforcement.is_finite() {
            return Err(UrnError::Reinforcement {
                color: color.index() as u8 + 1,
                value: reinforcement,
            });
        }
        let k = color.index();
        self.mass[k].add(reinforcement);
        self.draws[k] += 1;
        self.centered[k].add(reinforcement / laws.get(color).mean() - 1.0);
        Ok(DrawRecord {
            step: self.n(),
            color,
            reinforcement,
        })
    }

    /// Samples the next color from the current composition.
    #[inline]
    pub fn sample_color<R: Rng + ?Sized>(&self, rng: &mut R) -> Color {
        Color::from_index(self.sample_index(rng))
    }

    #[inline(always)]
    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let (y1, y2) = (self.y1(), self.y2());
        (rng.random::<f64>() * (y1 + y2) >= y1) as usize
    }

    /// One draw-and-reinforce step.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, laws: &LawPair, rng: &mut R) -> DrawRecord {
        let k = self.sample_index(rng);
        let law = &laws.laws[k];
        let reinforcement = law.sample(rng);
        self.mass[k].add(reinforcement);
        self.draws[k] += 1;
        self.centered[k].add(reinforcement * law.inv_mean() - 1.0);
        DrawRecord {
            step: self.n(),
            color: Color::from_index(k),
            reinforcement,
        }
    }

    /// Checks the masses are still finite, for long horizons.
    pub fn check_finite(&self) -> Result<(), UrnError> {
        let (y1, y2) = (self.y1(), self.y2());
        if y1.is_finite() && y2.is_finite() && (y1 + y2).is_finite() {
            Ok(())
        } else {
            Err(UrnError::MassOverflow { step: self.n(), y1, y2 })
        }
    }
}

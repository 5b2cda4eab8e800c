//! Compensated summation for long-running ball-mass accumulators.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
///
/// The urn adds up to ~10^7 reinforcements to each color; plain `f64`
/// accumulation drifts by O(n·ulp) while this stays at O(ulp).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub const fn new(value: f64) -> Self {
        Self { sum: value, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

//! Checkpoint schedules.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math::{log, pow};

/// Ratio of the default geometric grid, `2^{1/4}`.
pub const DEFAULT_RATIO: f64 = 1.189_207_115_002_721;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointSchedule {
    /// `round(ratio^k)` for `k = 0, 1, …` below the horizon, plus the horizon.
    Geometric { ratio: f64 },
    /// Exactly these steps.
    Explicit(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("geometric ratio {0} must exceed 1")]
    Ratio(f64),
    #[error("schedule is empty")]
    Empty,
    #[error("checkpoint {point} outside [1, {horizon}]")]
    OutOfRange { point: u64, horizon: u64 },
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        CheckpointSchedule::Geometric { ratio: DEFAULT_RATIO }
    }
}

impl CheckpointSchedule {
    /// Sorted, de-duplicated checkpoint steps within `[1, horizon]`.
    pub fn points(&self, horizon: u64) -> Result<Vec<u64>, ScheduleError> {
        if horizon == 0 {
            return Err(ScheduleError::ZeroHorizon);
        }
        let mut pts = match self {
            CheckpointSchedule::Geometric { ratio } => {
                let mut pts = geometric_points(1, horizon, *ratio)?;
                if pts.last() != Some(&horizon) {
                    pts.push(horizon);
                }
                pts
            }
            CheckpointSchedule::Explicit(pts) => {
                if let Some(&p) = pts.iter().find(|&&p| p == 0 || p > horizon) {
                    return Err(ScheduleError::OutOfRange { point: p, horizon });
                }
                pts.clone()
            }
        };
        pts.sort_unstable();
        pts.dedup();
        if pts.is_empty() {
            return Err(ScheduleError::Empty);
        }
        Ok(pts)
    }
}

/// `round(start · ratio^k)` for all `k` with value in `[start, end]`.
pub fn geometric_points(start: u64, end: u64, ratio: f64) -> Result<Vec<u64>, ScheduleError> {
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(ScheduleError::Ratio(ratio));
    }
    let start = start.max(1);
    let mut pts = Vec::new();
    let steps = (log(end as f64 / start as f64) / log(ratio)) as i64 + 2;
    for k in 0..=steps.max(0) {
        let v = libm::round(start as f64 * pow(ratio, k as f64));
        if v > end as f64 {
            break;
        }
        let v = v as u64;
        if pts.last() != Some(&v) {
            pts.push(v);
        }
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn doubling_grid_with_horizon() {
        let s = CheckpointSchedule::Geometric { ratio: 2.0 };
        assert_eq!(s.points(10).unwrap(), vec![1, 2, 4, 8, 10]);
        assert_eq!(s.points(8).unwrap(), vec![1, 2, 4, 8]);
    }

    #[test]
    fn default_grid_is_logarithmic_in_size() {
        let pts = CheckpointSchedule::default().points(1 << 20).unwrap();
        assert!(pts.len() <= 4 * 20 + 2);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*pts.last().unwrap(), 1 << 20);
        assert!(pts.contains(&(1 << 10)));
    }

    #[test]
    fn explicit_schedule_validation() {
        let s = CheckpointSchedule::Explicit(vec![8, 2, 2]);
        assert_eq!(s.points(8).unwrap(), vec![2, 8]);
        assert!(matches!(
            CheckpointSchedule::Explicit(vec![9]).points(8),
            Err(ScheduleError::OutOfRange { point: 9, .. })
        ));
        assert_eq!(CheckpointSchedule::Explicit(vec![]).points(8), Err(ScheduleError::Empty));
        assert_eq!(CheckpointSchedule::default().points(0), Err(ScheduleError::ZeroHorizon));
    }
}

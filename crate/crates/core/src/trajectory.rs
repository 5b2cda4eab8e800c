//! Checkpointed urn runs.

use alloc::vec::Vec;
use core::ops::DerefMut;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::schedule::{CheckpointSchedule, ScheduleError};
use crate::stats::{self, StatsError};
use crate::urn::{Color, LawPair, UrnError, UrnState};

/// All derived statistics at one step of a run.
///
/// Computed for both regimes; `sigma_tilde` and `time_scale` only carry
/// meaning when the means are equal, `psi` uses `ρ = m_1/m_2` (1 when equal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub y1: f64,
    pub y2: f64,
    pub n1: u64,
    pub n2: u64,
    pub z: f64,
    pub psi: f64,
    pub log_ratio: f64,
    pub sigma_tilde: f64,
    pub time_scale: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Checkpoint {
    pub fn from_state(state: &UrnState, laws: &LawPair) -> Self {
        let (m1, m2) = laws.means();
        let (s1, s2) = laws.sigma2();
        let (y1, y2) = (state.y1(), state.y2());
        let z = state.z();
        Self {
            n: state.n(),
            y1,
            y2,
            n1: state.n1(),
            n2: state.n2(),
            z,
            psi: stats::psi(y1, y2, laws.rho()),
            log_ratio: stats::log_ratio(y1, y2, m1, m2),
            sigma_tilde: stats::sigma_tilde(z, s1, s2),
            time_scale: stats::time_scale(z, s1, s2),
            a1: stats::residual(state, Color::One),
            a2: stats::residual(state, Color::Two),
        }
    }

    /// `Z` strictly inside (0, 1) and `ψ` finite and positive.
    pub fn is_regular(&self) -> bool {
        self.z > 0.0 && self.z < 1.0 && self.psi > 0.0 && self.psi.is_finite()
    }
}

/// Every-step record of `Z_l` and `ψ_l` for `l = 0..=len`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DensePath {
    pub z: Vec<f64>,
    pub psi: Vec<f64>,
}

impl DensePath {
    pub fn len(&self) -> u64 {
        self.z.len().saturating_sub(1) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub schedule: CheckpointSchedule,
    pub final_state: UrnState,
    pub dense: Option<DensePath>,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Urn(#[from] UrnError),
    #[error("dense prefix {prefix} exceeds horizon {horizon}")]
    DensePrefix { prefix: u64, horizon: u64 },
}

/// Runs the urn from `initial` for `horizon` steps.
///
/// Checkpoints are taken at every point of `schedule`; with `dense_prefix =
/// Some(k)` the proportion and `ψ` are also recorded at every step `0..=k`.
pub fn run_trajectory<R: Rng + ?Sized>(
    initial: &UrnState,
    laws: &LawPair,
    horizon: u64,
    schedule: &CheckpointSchedule,
    dense_prefix: Option<u64>,
    rng: &mut R,
) -> Result<Trajectory, TrajectoryError> {
    let mut out = run_trajectories(initial, laws, horizon, schedule, dense_prefix, &mut [rng])?;
    Ok(out.pop().expect("one lane"))
}

/// Runs one urn per stream in lock-step.
///
/// Lane `i` is bit-identical to [`run_trajectory`] with `rngs[i]`. Stepping
/// several independent urns together lets their draw-to-draw dependency
/// chains overlap, which roughly halves the cost per step.
pub fn run_trajectories<G: DerefMut>(
    initial: &UrnState,
    laws: &LawPair,
    horizon: u64,
    schedule: &CheckpointSchedule,
    dense_prefix: Option<u64>,
    rngs: &mut [G],
) -> Result<Vec<Trajectory>, TrajectoryError>
where
    G::Target: Rng,
{
    let points = schedule.points(horizon)?;
    if let Some(prefix) = dense_prefix {
        if prefix > horizon {
            return Err(TrajectoryError::DensePrefix { prefix, horizon });
        }
    }
    let rho = laws.rho();
    let lanes = rngs.len();
    let start = initial.n();
    let mut states: Vec<UrnState> = alloc::vec![*initial; lanes];
    let mut dense: Vec<DensePath> = match dense_prefix {
        Some(k) => (0..lanes)
            .map(|_| {
                let mut d = DensePath {
                    z: Vec::with_capacity(k as usize + 1),
                    psi: Vec::with_capacity(k as usize + 1),
                };
                d.z.push(initial.z());
                d.psi.push(stats::psi(initial.y1(), initial.y2(), rho));
                d
            })
            .collect(),
        None => Vec::new(),
    };
    let dense_len = dense_prefix.unwrap_or(0);
    let mut checkpoints: Vec<Vec<Checkpoint>> =
        (0..lanes).map(|_| Vec::with_capacity(points.len())).collect();
    let mut done = 0u64;
    for &target in &points {
        let dense_stop = target.min(dense_len);
        while done < dense_stop {
            for ((s, g), d) in states.iter_mut().zip(rngs.iter_mut()).zip(dense.iter_mut()) {
                s.step(laws, &mut **g);
                d.z.push(s.z());
                d.psi.push(stats::psi(s.y1(), s.y2(), rho));
            }
            done += 1;
        }
        while done < target {
            for (s, g) in states.iter_mut().zip(rngs.iter_mut()) {
                s.step(laws, &mut **g);
            }
            done += 1;
        }
        for (s, cps) in states.iter().zip(checkpoints.iter_mut()) {
            s.check_finite()?;
            let mut cp = Checkpoint::from_state(s, laws);
            cp.n -= start;
            cps.push(cp);
        }
    }
    let mut dense = dense.into_iter();
    Ok(states
        .into_iter()
        .zip(checkpoints)
        .map(|(final_state, checkpoints)| Trajectory {
            checkpoints,
            schedule: schedule.clone(),
            final_state,
            dense: dense.next(),
            rho,
        })
        .collect())
}

impl Trajectory {
    pub fn checkpoint(&self, n: u64) -> Option<&Checkpoint> {
        self.checkpoints
            .binary_search_by_key(&n, |c| c.n)
            .ok()
            .map(|i| &self.checkpoints[i])
    }

    fn dense_path(&self, n: u64) -> Result<&DensePath, StatsError> {
        match &self.dense {
            Some(d) if d.len() >= n => Ok(d),
            Some(d) => Err(StatsError::PathTooShort { requested: n, available: d.len() }),
            None => Err(StatsError::PathTooShort { requested: n, available: 0 }),
        }
    }

    /// One-sided equal-mean bridge maximum at step `n`, normalized by `σ̃_n √n`.
    pub fn bridge_max_statistic(&self, n: u64, laws: &LawPair) -> Result<f64, StatsError> {
        let d = self.dense_path(n)?;
        let (s1, s2) = laws.sigma2();
        let z_n = d.z[n as usize];
        if !(z_n > 0.0 && z_n < 1.0) {
            return Err(StatsError::Degenerate { z: z_n });
        }
        stats::bridge_max(&d.z, n, stats::sigma_tilde(z_n, s1, s2))
    }

    /// Unequal-mean bridge maximum at step `n`: weights `l^ρ`, normalized by
    /// [`stats::unequal_bridge_scale`].
    pub fn bridge_max_statistic_unequal(
        &self,
        n: u64,
        n1: u64,
        laws: &LawPair,
    ) -> Result<f64, StatsError> {
        let d = self.dense_path(n)?;
        let (m1, m2) = laws.means();
        let norm = stats::unequal_bridge_scale(laws.first().sigma2(), n1, m1, m2, self.rho);
        stats::bridge_max_weighted(&d.psi, n, self.rho, norm, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::ReinforcementLaw;
    use crate::rng::{stream, Domain};

    fn two_point_pair() -> LawPair {
        LawPair::new(
            ReinforcementLaw::two_point(0.0, 2.0, 0.5).unwrap(),
            ReinforcementLaw::two_point(0.0, 2.0, 0.5).unwrap(),
        )
    }

    #[test]
    fn replay_is_bit_identical() {
        let laws = two_point_pair();
        let s0 = UrnState::new(1.0, 1.0).unwrap();
        let sched = CheckpointSchedule::default();
        let a = run_trajectory(&s0, &laws, 5000, &sched, Some(100), &mut stream(9, Domain::Urn, 2))
            .unwrap();
        let b = run_trajectory(&s0, &laws, 5000, &sched, Some(100), &mut stream(9, Domain::Urn, 2))
            .unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&s0, &laws, 5000, &sched, Some(100), &mut stream(9, Domain::Urn, 3))
            .unwrap();
        assert_ne!(a.final_state, c.final_state);
    }

    #[test]
    fn lanes_match_single_runs() {
        let laws = two_point_pair();
        let s0 = UrnState::new(1.0, 2.0).unwrap();
        let sched = CheckpointSchedule::default();
        let mut rngs: Vec<_> = (0..3).map(|i| stream(5, Domain::Urn, i)).collect();
        let mut refs: Vec<&mut _> = rngs.iter_mut().collect();
        let batch = run_trajectories(&s0, &laws, 3000, &sched, Some(50), &mut refs).unwrap();
        for (i, t) in batch.iter().enumerate() {
            let single =
                run_trajectory(&s0, &laws, 3000, &sched, Some(50), &mut stream(5, Domain::Urn, i as u64))
                    .unwrap();
            assert_eq!(*t, single);
        }
    }

    #[test]
    fn schedule_arithmetic() {
        let laws = two_point_pair();
        let s0 = UrnState::new(1.0, 1.0).unwrap();
        let t = run_trajectory(
            &s0,
            &laws,
            10,
            &CheckpointSchedule::Geometric { ratio: 2.0 },
            None,
            &mut stream(1, Domain::Urn, 0),
        )
        .unwrap();
        let ns: Vec<u64> = t.checkpoints.iter().map(|c| c.n).collect();
        assert_eq!(ns, alloc::vec![1, 2, 4, 8, 10]);
        for c in &t.checkpoints {
            assert_eq!(c.n1 + c.n2, c.n);
        }
    }

    #[test]
    fn dense_prefix_records_every_step() {
        let laws = two_point_pair();
        let s0 = UrnState::new(1.0, 1.0).unwrap();
        let t = run_trajectory(
            &s0,
            &laws,
            64,
            &CheckpointSchedule::Explicit(alloc::vec![32, 64]),
            Some(32),
            &mut stream(1, Domain::Urn, 0),
        )
        .unwrap();
        let d = t.dense.as_ref().unwrap();
        assert_eq!(d.len(), 32);
        assert_eq!(d.z[0], 0.5);
        assert_eq!(d.z[32], t.checkpoint(32).unwrap().z);
        assert!(t.bridge_max_statistic(32, &laws).unwrap() >= 0.0);
        assert!(t.bridge_max_statistic(64, &laws).is_err());
        assert!(matches!(
            run_trajectory(&s0, &laws, 8, &CheckpointSchedule::default(), Some(9), &mut stream(1, Domain::Urn, 0)),
            Err(TrajectoryError::DensePrefix { .. })
        ));
    }

    #[test]
    fn residuals_shrink_like_iterated_log_envelope() {
        let laws = LawPair::new(
            ReinforcementLaw::two_point(1.0, 3.0, 0.5).unwrap(),
            ReinforcementLaw::two_point(0.0, 4.0, 0.5).unwrap(),
        );
        let s0 = UrnState::new(1.0, 1.0).unwrap();
        for rep in 0..20 {
            let t = run_trajectory(
                &s0,
                &laws,
                1 << 16,
                &CheckpointSchedule::default(),
                None,
                &mut stream(77, Domain::Urn, rep),
            )
            .unwrap();
            for c in t.checkpoints.iter().filter(|c| c.n > 100) {
                for (a, nk) in [(c.a1, c.n1), (c.a2, c.n2)] {
                    if nk > 1 {
                        let env = 5.0 * libm::sqrt(libm::log(c.n as f64) / nk as f64);
                        assert!(libm::fabs(a) <= env, "A={a} N={nk} n={}", c.n);
                    }
                }
            }
        }
    }
}

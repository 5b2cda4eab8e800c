//! One replicate: an urn run to the proxy horizon, reduced to the numbers
//! the checks need.

use alloc::vec::Vec;
use core::ops::Range;
use serde::{Deserialize, Serialize};

use super::config::{Experiment, TestKind};
use crate::rng::{stream, Domain, StreamRng};
use crate::schedule::{geometric_points, CheckpointSchedule};
use crate::stats;
use crate::trajectory::{run_trajectories, Checkpoint, Trajectory, TrajectoryError};
use crate::urn::Regime;

/// Replicates stepped together by [`run_replicates`].
pub const LANES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: u64,
    /// Checkpoints at [`Experiment::horizons`], ascending.
    pub checkpoints: Vec<Checkpoint>,
    /// Checkpoint at the proxy horizon `n∞`.
    pub proxy: Checkpoint,
    /// One-sided bridge maximum at the tested horizon.
    pub bridge: Option<f64>,
    pub bridge_two_sided: Option<f64>,
    /// Running max of the iterated-log normalized deviation over
    /// `[n∞/window, n∞]`, divided by `σ̃_{n∞}`.
    pub lil_ratio: Option<f64>,
}

impl ReplicateRecord {
    pub fn at(&self, n: u64) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.n == n)
    }

    /// Checkpoint at the largest kept horizon (the tested one).
    pub fn tested(&self) -> &Checkpoint {
        self.checkpoints.last().expect("at least one horizon")
    }

    /// True when any kept statistic hit an extreme proportion.
    pub fn is_degenerate(&self) -> bool {
        !self.proxy.is_regular() || self.checkpoints.iter().any(|c| !c.is_regular())
    }
}

/// Checkpoint steps for a replicate run.
pub fn replicate_schedule(exp: &Experiment) -> Vec<u64> {
    let run = &exp.config.run;
    let mut pts = exp.horizons();
    pts.push(run.proxy_horizon);
    if exp.wants(TestKind::LilEnvelope) {
        let start = (run.proxy_horizon / run.lil_window).max(16);
        if let Ok(grid) = geometric_points(start, run.proxy_horizon, run.lil_grid_ratio) {
            pts.extend(grid);
        }
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Runs replicates `indices`, each on its own stream, in batches of
/// [`LANES`]. Output is ordered by index and independent of batching.
pub fn run_replicates(
    exp: &Experiment,
    indices: Range<u64>,
) -> Result<Vec<ReplicateRecord>, TrajectoryError> {
    let schedule = CheckpointSchedule::Explicit(replicate_schedule(exp));
    let run = &exp.config.run;
    let dense = exp.dense_prefix();
    let mut out = Vec::with_capacity((indices.end - indices.start) as usize);
    let mut next = indices.start;
    while next < indices.end {
        let end = (next + LANES as u64).min(indices.end);
        let mut rngs: Vec<StreamRng> =
            (next..end).map(|i| stream(exp.config.seed, Domain::Urn, i)).collect();
        let trajs = run_trajectories(
            &exp.initial,
            &exp.laws,
            run.proxy_horizon,
            &schedule,
            dense,
            &mut rngs.iter_mut().collect::<Vec<_>>(),
        )?;
        for (i, t) in (next..end).zip(trajs) {
            out.push(reduce(exp, i, &t));
        }
        next = end;
    }
    Ok(out)
}

fn reduce(exp: &Experiment, index: u64, t: &Trajectory) -> ReplicateRecord {
    let run = &exp.config.run;
    let checkpoints: Vec<Checkpoint> =
        exp.horizons().iter().filter_map(|&h| t.checkpoint(h).copied()).collect();
    let proxy = *t.checkpoint(run.proxy_horizon).expect("proxy horizon is scheduled");
    let n = run.horizon;
    let (bridge, bridge_two_sided) = match (&t.dense, exp.laws.regime()) {
        (Some(d), Regime::EqualMean) => {
            let (s1, s2) = exp.laws.sigma2();
            let z_n = d.z[n as usize];
            let st = stats::sigma_tilde(z_n, s1, s2);
            (
                stats::bridge_max(&d.z, n, st).ok(),
                stats::bridge_max_two_sided(&d.z, n, st).ok(),
            )
        }
        (Some(d), Regime::UnequalMean) => {
            let (m1, m2) = exp.laws.means();
            let n1 = t.checkpoint(n).map(|c| c.n1).unwrap_or(0);
            let norm = stats::unequal_bridge_scale(exp.laws.first().sigma2(), n1, m1, m2, t.rho);
            (
                stats::bridge_max_weighted(&d.psi, n, t.rho, norm, false).ok(),
                stats::bridge_max_weighted(&d.psi, n, t.rho, norm, true).ok(),
            )
        }
        (None, _) => (None, None),
    };
    let lil_ratio = if exp.wants(TestKind::LilEnvelope) && proxy.is_regular() {
        let start = run.proxy_horizon / run.lil_window;
        let mut best = 0.0_f64;
        for c in t.checkpoints.iter().filter(|c| c.n >= start.max(16)) {
            if let Ok(v) = stats::lil_normalized(c.n, c.z, proxy.z) {
                best = best.max(libm::fabs(v));
            }
        }
        Some(best / proxy.sigma_tilde)
    } else {
        None
    };
    ReplicateRecord { index, checkpoints, proxy, bridge, bridge_two_sided, lil_ratio }
}

//! Kolmogorov–Smirnov distance and its null calibration.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Two-sided sup distance between the empirical CDF of `sample` and `cdf`.
///
/// Returns 0 for an empty sample. Non-finite sample values sort to the ends.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted: Vec<f64> = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    ks_distance_sorted(&sorted, cdf)
}

/// [`ks_distance`] for an already sorted sample.
pub fn ks_distance_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let r = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / r;
        let hi = (i + 1) as f64 / r;
        d = d.max(hi - f).max(f - lo);
    }
    d
}

/// KS distance of `r` uniform order statistics against the uniform CDF.
///
/// Order statistics come from normalized exponential spacings, so no sort is
/// needed. Invariance of the KS statistic under continuous CDFs makes this the
/// null law for every continuous reference.
pub fn null_ks_draw<R: Rng + ?Sized>(r: usize, rng: &mut R) -> f64 {
    let mut partial: Vec<f64> = Vec::with_capacity(r);
    let mut s = 0.0;
    for _ in 0..r {
        s += <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
        partial.push(s);
    }
    let total = s + <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
    let rf = r as f64;
    let mut d = 0.0_f64;
    for (i, &p) in partial.iter().enumerate() {
        let u = p / total;
        d = d.max((i + 1) as f64 / rf - u).max(u - i as f64 / rf);
    }
    d
}

/// Empirical `level` quantile (e.g. 0.99) of the KS null at sample size `r`,
/// from `sims` simulated null draws.
pub fn null_ks_quantile<R: Rng + ?Sized>(r: usize, level: f64, sims: usize, rng: &mut R) -> f64 {
    let mut draws: Vec<f64> = (0..sims).map(|_| null_ks_draw(r, rng)).collect();
    draws.sort_by(f64::total_cmp);
    let idx = (libm::ceil(level * sims as f64) as usize).clamp(1, sims) - 1;
    draws[idx]
}

//! Scalar special functions on top of `libm` (the crate is `no_std`).

pub use libm::{exp, fabs, log, log1p, pow, sqrt};

pub const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// Standard normal distribution function.
///
/// `libm::erfc` is a piecewise rational approximation accurate to a few ulp,
/// far inside the 1e-9 absolute error the KS checks need.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal quantile function.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by one
/// Halley step against `normal_cdf`, which brings it to ~1e-15.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = sqrt(-2.0 * log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = sqrt(-2.0 * log1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement.
    let e = normal_cdf(x) - p;
    let u = e * sqrt(2.0 * core::f64::consts::PI) * exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// Upper tail `P(X >= k)` of a Poisson(`lambda`) variable.
pub fn poisson_upper_tail(k: u64, lambda: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let log_pmf = |j: f64| j * log(lambda) - lambda - libm::lgamma(j + 1.0);
    if kf > lambda {
        // Sum the tail directly: terms decrease geometrically past the mode.
        let mut term = exp(log_pmf(kf));
        let mut total = 0.0;
        let mut j = kf;
        for _ in 0..100_000 {
            total += term;
            j += 1.0;
            term *= lambda / j;
            if term < total * 1e-17 {
                break;
            }
        }
        total.min(1.0)
    } else {
        let mut below = 0.0;
        let mut term = exp(-lambda);
        for j in 0..k {
            below += term;
            term *= lambda / (j as f64 + 1.0);
        }
        (1.0 - below).clamp(0.0, 1.0)
    }
}

/// `P(sup |Brownian bridge| >= x)`, the Kolmogorov survival function.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Theta-function form: fast for small x.
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            cdf += exp(-j * j * pi2 / (8.0 * x * x));
        }
        return (1.0 - sqrt(2.0 * core::f64::consts::PI) / x * cdf).clamp(0.0, 1.0);
    }
    let mut total = 0.0;
    for k in 1..=20 {
        let kf = k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * exp(-2.0 * kf * kf * x * x);
    }
    (2.0 * total).clamp(0.0, 1.0)
}

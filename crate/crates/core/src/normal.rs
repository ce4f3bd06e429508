//! Standard normal cdf, density and quantile function.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Φ(x), via `erfc` so the lower tail keeps full relative accuracy.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// ρ(x) = exp(−x²/2)/√(2π).
#[inline]
pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

// Acklam's rational approximation, relative error ≤ 1.15e-9 before polishing.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
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
const P_LOW: f64 = 0.02425;

fn initial_lower(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Φ⁻¹(p) for `p ∈ (0, 1)`: rational initial guess plus one Newton step
/// against [`cdf`]. Upper-half inputs are reflected (`1 − p` is exact there)
/// so the Newton residual is always taken in the accurate lower tail.
pub fn inv_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            value: p,
            domain: "the open interval (0, 1)",
        });
    }
    let (q, sign) = if p > 0.5 { (1.0 - p, -1.0) } else { (p, 1.0) };
    let mut x = initial_lower(q);
    x -= (cdf(x) - q) / pdf(x);
    Ok(sign * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// erf by its Maclaurin series, independent of libm.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term.abs() > 1e-18 * sum.abs() {
            n += 1.0;
            term *= -x * x / n;
            sum += term / (2.0 * n + 1.0);
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }

    fn cdf_series(x: f64) -> f64 {
        0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
    }

    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-8.0, 8.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf_series(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn fixed_values() {
        assert_eq!(cdf(0.0), 0.5);
        assert!((pdf(0.0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-16);
        assert_eq!(inv_cdf(0.5).unwrap(), 0.0);
        assert!(inv_cdf(1.0).is_err());
        assert!(inv_cdf(0.0).is_err());
        assert!(inv_cdf(f64::NAN).is_err());
    }

    #[test]
    fn quantile_matches_series_oracle() {
        let oracle = bisect_quantile(0.975);
        assert!((oracle - 1.959_963_985).abs() < 1e-9);
        assert!((inv_cdf(0.975).unwrap() - oracle).abs() < 1e-9);
        for p in [0.01, 0.1, 0.3, 0.45, 0.6, 0.8, 0.95, 0.99] {
            assert!((inv_cdf(p).unwrap() - bisect_quantile(p)).abs() < 1e-9, "{p}");
        }
        for x in [-3.0, -1.5, -0.2, 0.0, 0.7, 2.5] {
            assert!((cdf(x) - cdf_series(x)).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn quantile_tails() {
        // the lower tail is tested through Φ, which is relatively accurate there
        for k in 1..=12 {
            let p = 10f64.powi(-k);
            let x = inv_cdf(p).unwrap();
            assert!(((cdf(x) - p) / p).abs() < 1e-12, "{p}");
            assert_eq!(inv_cdf(1.0 - p).unwrap(), -inv_cdf(1.0 - (1.0 - p)).unwrap());
        }
    }

    #[test]
    fn round_trip_on_grid() {
        // above x ≈ 5 the double nearest Φ(x) alone moves the quantile by more
        // than 1e-9 (ulp(1)/ρ(x)), so the upper end goes through the reflection
        let mut worst: f64 = 0.0;
        for i in 0..=1200 {
            let x = -6.0 + i as f64 * 0.01;
            let back = if x <= 5.0 {
                inv_cdf(cdf(x)).unwrap()
            } else {
                -inv_cdf(cdf(-x)).unwrap()
            };
            worst = worst.max((back - x).abs());
        }
        assert!(worst < 1e-9, "worst round-trip error {worst:e}");
    }

    #[test]
    fn density_is_cdf_derivative() {
        let h = 1e-4;
        for i in 0..=80 {
            let x = -8.0 + i as f64 * 0.2;
            let fd = (cdf(x + h) - cdf(x - h)) / (2.0 * h);
            assert!((fd - pdf(x)).abs() < 1e-8, "{x}");
        }
    }

    proptest! {
        #[test]
        fn quantile_accuracy(u in 1e-12f64..(1.0 - 1e-12)) {
            let x = inv_cdf(u).unwrap();
            // |Φ⁻¹(u) − x*| ≈ |Φ(x) − u| / ρ(x); bound the forward residual accordingly
            prop_assert!((cdf(x) - u).abs() <= 1e-9 * pdf(x) + 2.0 * f64::EPSILON * u.max(1.0 - u));
        }
    }
}

//! Closed-form preintegration over `w_0`.
//!
//! With `φ_h(w, z) = φ̄ + Σ_i w_i φ_i` and `φ_0 > 0`, the indicator
//! `1{φ_h ≤ t}` integrated against the normal density in `w_0` is
//! `Φ(ξ)` where `ξ = (t − φ̄ − Σ_{i≥1} w_i φ_i) / φ_0`, and its `t`-derivative
//! is `ρ(ξ) / φ_0`. Both are smooth in the remaining variables.

use crate::error::{Error, Result};
use crate::fem::QoiComponents;
use crate::normal;

/// The `w_0`-free part of one QMC sample: everything needed to evaluate the
/// smoothed integrands at any `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preintegrand {
    offset: f64,
    phi0: f64,
}

impl Preintegrand {
    /// `w_rest` holds `w_1, …, w_s`.
    pub fn new(w_rest: &[f64], comps: &QoiComponents) -> Result<Self> {
        if w_rest.len() != comps.s() {
            return Err(Error::DimensionMismatch {
                what: "w_1..w_s",
                expected: comps.s(),
                got: w_rest.len(),
            });
        }
        let phi0 = comps.phi[0];
        if !(phi0 > 0.0) {
            return Err(Error::Monotonicity {
                phi0,
                z: comps.z.clone(),
            });
        }
        let offset = comps.phibar + w_rest.iter().zip(&comps.phi[1..]).map(|(w, p)| w * p).sum::<f64>();
        Ok(Preintegrand { offset, phi0 })
    }

    #[inline]
    pub fn xi(&self, t: f64) -> f64 {
        (t - self.offset) / self.phi0
    }

    #[inline]
    pub fn cdf(&self, t: f64) -> f64 {
        normal::cdf(self.xi(t))
    }

    #[inline]
    pub fn pdf(&self, t: f64) -> f64 {
        normal::pdf(self.xi(t)) / self.phi0
    }
}

/// ξ_h(t, y): the unique `w_0` with `φ_h(w_0, w_rest, z) = t`.
pub fn discontinuity_point(t: f64, w_rest: &[f64], comps: &QoiComponents) -> Result<f64> {
    Preintegrand::new(w_rest, comps).map(|p| p.xi(t))
}

/// `Φ(ξ_h(t, y))`.
pub fn g_cdf_eval(t: f64, w_rest: &[f64], comps: &QoiComponents) -> Result<f64> {
    Preintegrand::new(w_rest, comps).map(|p| p.cdf(t))
}

/// `ρ(ξ_h(t, y)) / φ_0`.
pub fn g_pdf_eval(t: f64, w_rest: &[f64], comps: &QoiComponents) -> Result<f64> {
    Preintegrand::new(w_rest, comps).map(|p| p.pdf(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // QoiComponents::new rejects phi0 ≤ 0, so build the raw struct directly
    fn comps(phibar: f64, phi: &[f64]) -> QoiComponents {
        QoiComponents {
            phibar,
            phi: phi.to_vec(),
            z: vec![0.0; phi.len() - 1],
        }
    }

    #[test]
    fn xi_examples() {
        assert_eq!(discontinuity_point(0.0, &[0.0, 0.0], &comps(0.0, &[1.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(discontinuity_point(1.0, &[0.0], &comps(0.0, &[2.0, 0.0])).unwrap(), 0.5);
        assert!(matches!(
            discontinuity_point(1.0, &[0.0], &comps(0.0, &[0.0, 1.0])),
            Err(Error::Monotonicity { .. })
        ));
        assert!(discontinuity_point(1.0, &[0.0, 0.0], &comps(0.0, &[1.0, 1.0])).is_err());
    }

    #[test]
    fn xi_back_substitutes() {
        let c = comps(0.3, &[0.7, -0.2, 1.1]);
        let w_rest = [0.4, -1.3];
        for t in [-2.0, 0.0, 0.9, 5.0] {
            let xi = discontinuity_point(t, &w_rest, &c).unwrap();
            let w = [xi, w_rest[0], w_rest[1]];
            assert!((c.value(&w) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_examples() {
        let c = comps(0.25, &[1.3, 0.4]);
        assert_eq!(g_cdf_eval(0.25, &[0.0], &c).unwrap(), 0.5);
        let mut prev = 0.0;
        for t in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let v = g_cdf_eval(t, &[0.0], &c).unwrap();
            assert!(v >= prev && v <= 1.0);
            prev = v;
        }
        assert!(1.0 - prev < 1e-15);
        // nonincreasing in w_i when φ_i > 0
        assert!(g_cdf_eval(1.0, &[0.5], &c).unwrap() < g_cdf_eval(1.0, &[0.0], &c).unwrap());
    }

    #[test]
    fn pdf_examples() {
        let c = comps(0.0, &[1.0, 0.0]);
        assert!((g_pdf_eval(0.0, &[0.0], &c).unwrap() - 0.398_942_280_4).abs() < 1e-10);
        let c2 = comps(0.0, &[2.0, 0.0]);
        assert_eq!(g_pdf_eval(0.0, &[0.0], &c2).unwrap(), 0.5 * g_pdf_eval(0.0, &[0.0], &c).unwrap());
        let c = comps(-0.4, &[0.8, 0.3, -0.6]);
        let d = 1e-4;
        for t in [-2.0, -0.5, 0.0, 0.3, 1.7] {
            let fd = (g_cdf_eval(t + d, &[0.2, 0.9], &c).unwrap() - g_cdf_eval(t - d, &[0.2, 0.9], &c).unwrap())
                / (2.0 * d);
            assert!((fd - g_pdf_eval(t, &[0.2, 0.9], &c).unwrap()).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn xi_affine_in_t(t in -5.0f64..5.0, dt in 0.01f64..3.0, phi0 in 0.05f64..4.0, w in -3.0f64..3.0) {
            let c = comps(0.1, &[phi0, 0.5]);
            let a = discontinuity_point(t, &[w], &c).unwrap();
            let b = discontinuity_point(t + dt, &[w], &c).unwrap();
            prop_assert!(((b - a) - dt / phi0).abs() < 1e-12 * (1.0 + dt / phi0));
            prop_assert!(g_cdf_eval(t + dt, &[w], &c).unwrap() >= g_cdf_eval(t, &[w], &c).unwrap());
            prop_assert!(g_pdf_eval(t, &[w], &c).unwrap() >= 0.0);
        }
    }
}

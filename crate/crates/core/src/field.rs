//! Lognormal diffusion coefficient and affine random source.
//!
//! The coefficient is `a(x, z) = exp(a0(x) + Σ_j z_j a_j(x))` and the source
//! is `ℓ(x, w) = ℓ̄(x) + Σ_i w_i ℓ_i(x)`, with every deterministic ingredient
//! drawn from a small set of named parametric families so that sup-norms are
//! computable and configs serialize to one line per field.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const SAMPLE_POINTS: usize = 10_001;
const SAMPLED_MARGIN: f64 = 0.01;

/// A deterministic scalar function on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    /// Tensor product `Π_d p(x_d)` of one polynomial `p(t) = Σ_k c_k t^k`,
    /// degree at most 4.
    Polynomial(Vec<f64>),
    /// `amplitude · j^(−decay) · Π_d sin(j π x_d)`.
    SineMode {
        amplitude: f64,
        frequency: u32,
        decay: f64,
    },
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::Constant(0.0)
    }

    pub fn sine(amplitude: f64, frequency: u32, decay: f64) -> Self {
        ScalarField::SineMode {
            amplitude,
            frequency,
            decay,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ScalarField::Constant(c) => c.is_finite(),
            ScalarField::Polynomial(c) => !c.is_empty() && c.len() <= 5 && c.iter().all(|v| v.is_finite()),
            ScalarField::SineMode {
                amplitude,
                frequency,
                decay,
            } => amplitude.is_finite() && decay.is_finite() && *frequency >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidField(format!("bad parameters in `{self}`")))
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Polynomial(c) => x.iter().map(|&t| horner(c, t)).product(),
            ScalarField::SineMode {
                amplitude,
                frequency,
                decay,
            } => {
                let j = *frequency as f64;
                let scale = amplitude * j.powf(-decay);
                scale
                    * x.iter()
                        .map(|&t| (j * std::f64::consts::PI * t).sin())
                        .product::<f64>()
            }
        }
    }

    /// Lower and upper bounds of the field over `[0,1]^dimension`. Exact for
    /// constants and sine modes; for polynomials, sampled extremes widened by
    /// 1% of the sampled sup-norm.
    pub fn bounds(&self, dimension: usize) -> (f64, f64) {
        let (lo, hi) = match self {
            ScalarField::Constant(c) => (*c, *c),
            ScalarField::Polynomial(c) => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..SAMPLE_POINTS {
                    let v = horner(c, i as f64 / (SAMPLE_POINTS - 1) as f64);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let margin = SAMPLED_MARGIN * lo.abs().max(hi.abs());
                (lo - margin, hi + margin)
            }
            ScalarField::SineMode {
                amplitude,
                frequency,
                decay,
            } => {
                let scale = amplitude * (*frequency as f64).powf(-decay);
                // Π sin(jπx_d) ranges over [0,1] for j = 1 and [-1,1] otherwise
                let (plo, phi) = if *frequency == 1 { (0.0, 1.0) } else { (-1.0, 1.0) };
                if scale >= 0.0 {
                    (scale * plo, scale * phi)
                } else {
                    (scale * phi, scale * plo)
                }
            }
        };
        match (self, dimension) {
            (ScalarField::Polynomial(_), 2) => {
                let products = [lo * lo, lo * hi, hi * hi];
                (
                    products.iter().copied().fold(f64::INFINITY, f64::min),
                    products.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            }
            _ => (lo, hi),
        }
    }

    pub fn sup_norm(&self, dimension: usize) -> f64 {
        let (lo, hi) = self.bounds(dimension);
        lo.abs().max(hi.abs())
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "constant {c:?}"),
            ScalarField::Polynomial(c) => {
                write!(f, "polynomial")?;
                for v in c {
                    write!(f, " {v:?}")?;
                }
                Ok(())
            }
            ScalarField::SineMode {
                amplitude,
                frequency,
                decay,
            } => write!(f, "sine {amplitude:?} {frequency} {decay:?}"),
        }
    }
}

/// Parses `constant C`, `polynomial c0 c1 ...` or `sine AMPLITUDE J DECAY`.
impl FromStr for ScalarField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let family = parts.next().unwrap_or_default();
        let nums: Vec<&str> = parts.collect();
        let reals = || -> Result<Vec<f64>> {
            nums.iter()
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| Error::InvalidField(format!("`{p}` is not a number in `{s}`")))
                })
                .collect()
        };
        let field = match family {
            "constant" => match reals()?.as_slice() {
                [c] => ScalarField::Constant(*c),
                _ => return Err(Error::InvalidField(format!("constant takes one value: `{s}`"))),
            },
            "polynomial" => ScalarField::Polynomial(reals()?),
            "sine" => {
                if nums.len() != 3 {
                    return Err(Error::InvalidField(format!(
                        "sine takes amplitude, frequency, decay: `{s}`"
                    )));
                }
                let frequency = nums[1]
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidField(format!("frequency must be a positive integer: `{s}`")))?;
                let r = reals()?;
                ScalarField::sine(r[0], frequency, r[2])
            }
            other => return Err(Error::InvalidField(format!("unknown family `{other}`"))),
        };
        field.validate()?;
        Ok(field)
    }
}

/// Deterministic data of the random coefficient and source for truncation
/// dimension `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    s: usize,
    a0: ScalarField,
    a_modes: Vec<ScalarField>,
    ell_bar: ScalarField,
    ell_modes: Vec<ScalarField>,
}

impl FieldSpec {
    /// Validates mode counts, parameters and strict positivity of `ℓ_0`.
    pub fn new(
        a0: ScalarField,
        a_modes: Vec<ScalarField>,
        ell_bar: ScalarField,
        ell_modes: Vec<ScalarField>,
    ) -> Result<Self> {
        let s = a_modes.len();
        if s == 0 {
            return Err(Error::InvalidField("need at least one coefficient mode".into()));
        }
        if ell_modes.len() != s + 1 {
            return Err(Error::DimensionMismatch {
                what: "source modes",
                expected: s + 1,
                got: ell_modes.len(),
            });
        }
        for f in std::iter::once(&a0)
            .chain(&a_modes)
            .chain(std::iter::once(&ell_bar))
            .chain(&ell_modes)
        {
            f.validate()?;
        }
        for dimension in [1, 2] {
            let (lo, _) = ell_modes[0].bounds(dimension);
            let sampled = sampled_min(&ell_modes[0], dimension);
            if !(lo > 0.0 && sampled > 0.0) {
                return Err(Error::InvalidField(format!(
                    "ell_0 = `{}` is not strictly positive on the domain (lower bound {lo:e})",
                    ell_modes[0]
                )));
            }
        }
        Ok(FieldSpec {
            s,
            a0,
            a_modes,
            ell_bar,
            ell_modes,
        })
    }

    /// Smooth lognormal fixture: `a_j = 0.1 j^-2 sin(jπx)`, `ℓ̄ = ℓ_0 = 1`,
    /// `ℓ_i = 0.2 i^-2 sin(iπx)` (products over coordinates in 2D).
    pub fn lognormal_fixture(s: usize) -> Self {
        let a_modes = (1..=s as u32).map(|j| ScalarField::sine(0.1, j, 2.0)).collect();
        Self::new(ScalarField::zero(), a_modes, ScalarField::Constant(1.0), fixture_sources(s))
            .expect("fixture is valid")
    }

    /// Same source as [`FieldSpec::lognormal_fixture`] with `a ≡ 1`.
    pub fn constant_fixture(s: usize) -> Self {
        Self::new(
            ScalarField::zero(),
            vec![ScalarField::zero(); s],
            ScalarField::Constant(1.0),
            fixture_sources(s),
        )
        .expect("fixture is valid")
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn a0(&self) -> &ScalarField {
        &self.a0
    }

    pub fn a_modes(&self) -> &[ScalarField] {
        &self.a_modes
    }

    pub fn ell_bar(&self) -> &ScalarField {
        &self.ell_bar
    }

    pub fn ell_modes(&self) -> &[ScalarField] {
        &self.ell_modes
    }

    /// True when every coefficient mode vanishes, so the solution does not
    /// depend on `z` and the QoI is exactly Gaussian.
    pub fn is_coefficient_deterministic(&self) -> bool {
        self.a_modes.iter().all(|m| m.sup_norm(1) == 0.0 && m.sup_norm(2) == 0.0)
    }

    fn check_len(&self, what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::DimensionMismatch { what, expected, got });
        }
        Ok(())
    }

    /// `log a(x, z)`.
    pub fn log_coefficient(&self, z: &[f64], x: &[f64]) -> Result<f64> {
        self.check_len("z", self.s, z.len())?;
        Ok(self.a0.eval(x) + z.iter().zip(&self.a_modes).map(|(zj, aj)| zj * aj.eval(x)).sum::<f64>())
    }
}

fn fixture_sources(s: usize) -> Vec<ScalarField> {
    std::iter::once(ScalarField::Constant(1.0))
        .chain((1..=s as u32).map(|i| ScalarField::sine(0.2, i, 2.0)))
        .collect()
}

pub(crate) fn sampled_min(f: &ScalarField, dimension: usize) -> f64 {
    const GRID: usize = 1000;
    let t = |i: usize| (i as f64 + 0.5) / GRID as f64;
    match dimension {
        1 => (0..GRID).map(|i| f.eval(&[t(i)])).fold(f64::INFINITY, f64::min),
        _ => {
            let side = (GRID as f64).sqrt().ceil() as usize;
            let t2 = |i: usize| (i as f64 + 0.5) / side as f64;
            (0..side * side)
                .map(|k| f.eval(&[t2(k % side), t2(k / side)]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// A parameter point `y = (w, z)` with `w ∈ R^{s+1}`, `z ∈ R^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

impl ParameterPoint {
    pub fn new(spec: &FieldSpec, w: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        spec.check_len("w", spec.s + 1, w.len())?;
        spec.check_len("z", spec.s, z.len())?;
        if let Some(&v) = w.iter().chain(&z).find(|v| !v.is_finite()) {
            return Err(Error::Domain {
                value: v,
                domain: "finite reals",
            });
        }
        Ok(ParameterPoint { w, z })
    }
}

/// `a(x, z) = exp(a0(x) + Σ_j z_j a_j(x))`.
pub fn eval_coefficient(spec: &FieldSpec, z: &[f64], x: &[f64]) -> Result<f64> {
    spec.log_coefficient(z, x).map(f64::exp)
}

/// `ℓ(x, w) = ℓ̄(x) + Σ_i w_i ℓ_i(x)`.
pub fn eval_source(spec: &FieldSpec, w: &[f64], x: &[f64]) -> Result<f64> {
    spec.check_len("w", spec.s + 1, w.len())?;
    Ok(spec.ell_bar.eval(x) + w.iter().zip(&spec.ell_modes).map(|(wi, li)| wi * li.eval(x)).sum::<f64>())
}

/// Envelope `(amin, amax)` with `amin ≤ a(x, z) ≤ amax` on `[0,1]^dimension`.
pub fn coefficient_extremes(spec: &FieldSpec, z: &[f64], dimension: usize) -> Result<(f64, f64)> {
    spec.check_len("z", spec.s, z.len())?;
    let spread: f64 = z
        .iter()
        .zip(&spec.a_modes)
        .map(|(zj, aj)| zj.abs() * aj.sup_norm(dimension))
        .sum();
    let (inf_a0, _) = spec.a0.bounds(dimension);
    let sup_a0 = spec.a0.sup_norm(dimension);
    Ok(((inf_a0 - spread).exp(), (sup_a0 + spread).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_mode(a1: ScalarField) -> FieldSpec {
        FieldSpec::new(
            ScalarField::zero(),
            vec![a1],
            ScalarField::zero(),
            vec![ScalarField::Constant(1.0), ScalarField::zero()],
        )
        .unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let spec = FieldSpec::lognormal_fixture(3);
        assert_eq!(eval_coefficient(&spec, &[0.0; 3], &[0.3]).unwrap(), 1.0);
        let spec = single_mode(ScalarField::Constant(0.5));
        let a = eval_coefficient(&spec, &[2.0], &[0.7]).unwrap();
        assert!((a - std::f64::consts::E).abs() < 1e-15);
        let spec = FieldSpec::lognormal_fixture(2);
        assert!(matches!(
            eval_coefficient(&spec, &[0.0; 3], &[0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn source_examples() {
        let spec = FieldSpec::lognormal_fixture(2);
        assert_eq!(eval_source(&spec, &[0.0; 3], &[0.4]).unwrap(), 1.0);
        let spec = FieldSpec::new(
            ScalarField::zero(),
            vec![ScalarField::zero(); 2],
            ScalarField::zero(),
            vec![ScalarField::Constant(1.0), ScalarField::sine(1.0, 1, 0.0), ScalarField::zero()],
        )
        .unwrap();
        assert_eq!(eval_source(&spec, &[3.0, 0.0, 0.0], &[0.25]).unwrap(), 3.0);
        assert!(eval_source(&spec, &[0.0; 2], &[0.25]).is_err());
    }

    #[test]
    fn extremes_examples() {
        let spec = FieldSpec::lognormal_fixture(2);
        assert_eq!(coefficient_extremes(&spec, &[0.0, 0.0], 1).unwrap(), (1.0, 1.0));
        let e = std::f64::consts::E;
        let spec = single_mode(ScalarField::Constant(0.5));
        let (lo, hi) = coefficient_extremes(&spec, &[2.0], 1).unwrap();
        assert!((lo - 1.0 / e).abs() < 1e-15 && (hi - e).abs() < 1e-15);
        let spec = single_mode(ScalarField::sine(1.0, 1, 0.0));
        assert_eq!(spec.a_modes()[0].sup_norm(1), 1.0);
        let (lo, hi) = coefficient_extremes(&spec, &[1.0], 1).unwrap();
        assert!((lo - 1.0 / e).abs() < 1e-15 && (hi - e).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_ell0() {
        for ell0 in [
            ScalarField::Constant(0.0),
            ScalarField::sine(1.0, 1, 0.0),
            ScalarField::Polynomial(vec![0.5, -1.0]),
        ] {
            let r = FieldSpec::new(ScalarField::zero(), vec![ScalarField::zero()], ScalarField::zero(), vec![
                ell0,
                ScalarField::zero(),
            ]);
            assert!(matches!(r, Err(Error::InvalidField(_))), "{r:?}");
        }
        assert!(FieldSpec::new(ScalarField::zero(), vec![ScalarField::zero()], ScalarField::zero(), vec![
            ScalarField::Polynomial(vec![1.0, -0.5, 0.25]),
            ScalarField::zero(),
        ])
        .is_ok());
    }

    #[test]
    fn parse_and_display_round_trip() {
        for text in ["constant 1.5", "polynomial 1.0 -0.5 0.25", "sine 0.1 3 2.0"] {
            let f: ScalarField = text.parse().unwrap();
            assert_eq!(f.to_string().parse::<ScalarField>().unwrap(), f);
        }
        for bad in ["", "cosine 1", "constant", "sine 1 0 2", "sine 1 1.5 2", "polynomial 1 2 3 4 5 6"] {
            assert!(bad.parse::<ScalarField>().is_err(), "{bad}");
        }
    }

    #[test]
    fn fixture_bounds_hold_densely() {
        let spec = FieldSpec::lognormal_fixture(4);
        let mut rng = rand::rng();
        use rand::Rng;
        for dimension in [1, 2] {
            for _ in 0..10_000 {
                let z: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
                let x: Vec<f64> = (0..dimension).map(|_| rng.random::<f64>()).collect();
                let a = eval_coefficient(&spec, &z, &x).unwrap();
                let (lo, hi) = coefficient_extremes(&spec, &z, dimension).unwrap();
                assert!(lo <= a && a <= hi);
            }
        }
    }

    #[test]
    fn polynomial_bounds_enclose_samples() {
        let p = ScalarField::Polynomial(vec![0.2, -1.3, 0.4, 2.0, -0.7]);
        for dimension in [1, 2] {
            let (lo, hi) = p.bounds(dimension);
            for i in 0..=200 {
                for j in 0..=(if dimension == 2 { 200 } else { 0 }) {
                    let x = [i as f64 / 200.0, j as f64 / 200.0];
                    let v = p.eval(&x[..dimension]);
                    assert!(lo <= v && v <= hi);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn log_coefficient_affine_in_z(
            z in prop::collection::vec(-3.0f64..3.0, 3),
            zp in prop::collection::vec(-3.0f64..3.0, 3),
            x in 0.0f64..1.0,
        ) {
            let spec = FieldSpec::new(
                ScalarField::Polynomial(vec![0.1, 0.3]),
                vec![ScalarField::sine(0.5, 1, 1.0), ScalarField::Constant(-0.2), ScalarField::Polynomial(vec![0.0, 1.0, -1.0])],
                ScalarField::zero(),
                vec![ScalarField::Constant(1.0), ScalarField::zero(), ScalarField::zero(), ScalarField::zero()],
            ).unwrap();
            let sum: Vec<f64> = z.iter().zip(&zp).map(|(a, b)| a + b).collect();
            let lhs = eval_coefficient(&spec, &sum, &[x]).unwrap().ln();
            let rhs = eval_coefficient(&spec, &z, &[x]).unwrap().ln()
                + eval_coefficient(&spec, &zp, &[x]).unwrap().ln()
                - spec.a0().eval(&[x]);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn source_affine_in_w(
            w in prop::collection::vec(-3.0f64..3.0, 3),
            wp in prop::collection::vec(-3.0f64..3.0, 3),
            x in 0.0f64..1.0,
            y in 0.0f64..1.0,
        ) {
            let spec = FieldSpec::lognormal_fixture(2);
            let sum: Vec<f64> = w.iter().zip(&wp).map(|(a, b)| a + b).collect();
            let p = [x, y];
            let lhs = eval_source(&spec, &w, &p).unwrap() + eval_source(&spec, &wp, &p).unwrap();
            let rhs = eval_source(&spec, &sum, &p).unwrap() + spec.ell_bar().eval(&p);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}

//! Randomly shifted rank-1 lattice rules.
//!
//! Points are `frac(k·z/N + Δ)` for a prime `N` and generating vector `z`
//! built by the component-by-component (CBC) greedy search, mapped to
//! Gaussian space through Φ⁻¹ componentwise. Independent shifts give an
//! unbiased estimate with a sample standard error.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normal;

/// Smallest coordinate handed to Φ⁻¹ (and `1 − OPEN_EPS` the largest).
pub const OPEN_EPS: f64 = 1.0 / (1u64 << 53) as f64;

/// Points per work unit in the parallel sums. Fixed so that results do not
/// depend on the number of workers.
const CHUNK: usize = 64;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime `≥ n`.
pub fn next_prime(mut n: u64) -> u64 {
    while !is_prime(n) {
        n += 1;
    }
    n
}

/// Product weights `γ_j = 1/j²`.
pub fn default_weights(dim: usize) -> Vec<f64> {
    (1..=dim).map(|j| 1.0 / (j * j) as f64).collect()
}

/// `B₂(i/N)` for `i = 0..N`, exactly symmetric under `i ↦ N − i`.
fn bernoulli2_table(n: u64) -> Vec<f64> {
    let n = n as usize;
    let mut table = vec![0.0; n];
    for i in 0..=n / 2 {
        let x = i as f64 / n as f64;
        table[i] = x * x - x + 1.0 / 6.0;
    }
    for i in n / 2 + 1..n {
        table[i] = table[n - i];
    }
    table
}

/// Squared shift-averaged worst-case error with product weights:
/// `−1 + (1/N) Σ_k Π_j (1 + γ_j B₂({k z_j / N}))`.
pub fn worst_case_error_squared(n: u64, generating_vector: &[u64], weights: &[f64]) -> f64 {
    let b2 = bernoulli2_table(n);
    let sum: f64 = (0..n)
        .map(|k| {
            generating_vector
                .iter()
                .zip(weights)
                .map(|(&z, &g)| 1.0 + g * b2[((k * z) % n) as usize])
                .product::<f64>()
        })
        .sum();
    sum / n as f64 - 1.0
}

/// Component-by-component construction. The first component is 1; each later
/// one minimizes the worst-case error given the earlier ones, ties going to
/// the smallest candidate. Costs `O(dim · N²)`.
pub fn cbc_generate(dim: usize, n: u64, weights: &[f64]) -> Result<Vec<u64>> {
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("lattice dimension must be at least 1".into()));
    }
    if weights.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "CBC weights",
            expected: dim,
            got: weights.len(),
        });
    }
    let b2 = bernoulli2_table(n);
    let nu = n as usize;
    let mut z = Vec::with_capacity(dim);
    let mut product = vec![1.0; nu];
    for (j, &gamma) in weights.iter().enumerate() {
        let best = if j == 0 {
            1
        } else {
            // c and N − c give identical errors, so half the range suffices
            let half = ((n - 1) / 2).max(1);
            let errors: Vec<f64> = (1..=half)
                .into_par_iter()
                .map(|c| {
                    (0..nu)
                        .map(|k| product[k] * (1.0 + gamma * b2[(k as u64 * c % n) as usize]))
                        .sum()
                })
                .collect();
            let mut best = 0;
            for (i, &e) in errors.iter().enumerate() {
                if e < errors[best] {
                    best = i;
                }
            }
            best as u64 + 1
        };
        for (k, p) in product.iter_mut().enumerate() {
            *p *= 1.0 + gamma * b2[(k as u64 * best % n) as usize];
        }
        z.push(best);
    }
    Ok(z)
}

/// A rank-1 lattice rule with `N` points in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRule {
    n: u64,
    generating_vector: Vec<u64>,
    weights: Vec<f64>,
}

impl LatticeRule {
    pub fn new(n: u64, generating_vector: Vec<u64>, weights: Vec<f64>) -> Result<Self> {
        if !is_prime(n) {
            return Err(Error::NotPrime(n));
        }
        if generating_vector.is_empty() {
            return Err(Error::InvalidArgument("empty generating vector".into()));
        }
        if let Some(&bad) = generating_vector.iter().find(|&&c| c == 0 || c >= n) {
            return Err(Error::OutOfRange { index: bad, len: n });
        }
        if weights.len() != generating_vector.len() || weights.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::InvalidArgument(
                "need one positive weight per lattice coordinate".into(),
            ));
        }
        Ok(LatticeRule {
            n,
            generating_vector,
            weights,
        })
    }

    /// CBC rule with the given product weights.
    pub fn cbc(dim: usize, n: u64, weights: Vec<f64>) -> Result<Self> {
        let z = cbc_generate(dim, n, &weights)?;
        Self::new(n, z, weights)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.generating_vector.len()
    }

    pub fn generating_vector(&self) -> &[u64] {
        &self.generating_vector
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn worst_case_error_squared(&self) -> f64 {
        worst_case_error_squared(self.n, &self.generating_vector, &self.weights)
    }

    /// Writes `N dim` on the first line and the generating vector on the second.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.dim());
        let parts: Vec<String> = self.generating_vector.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{}", parts.join(" "));
        out
    }

    /// Parses the format written by [`LatticeRule::to_text`]; weights default
    /// to [`default_weights`].
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("generating vector file: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<u64> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| bad("header must be `N dim`")))
            .collect::<Result<_>>()?;
        let [n, dim] = header[..] else {
            return Err(bad("header must be `N dim`"));
        };
        let z: Vec<u64> = lines
            .next()
            .ok_or_else(|| bad("missing generating vector"))?
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| bad("components must be integers")))
            .collect::<Result<_>>()?;
        if z.len() as u64 != dim {
            return Err(Error::DimensionMismatch {
                what: "generating vector",
                expected: dim as usize,
                got: z.len(),
            });
        }
        Self::new(n, z, default_weights(dim as usize))
    }
}

fn clamp_open(u: f64) -> f64 {
    if u <= 0.0 {
        OPEN_EPS
    } else if u >= 1.0 {
        1.0 - OPEN_EPS
    } else {
        u
    }
}

/// `frac(k·z/N + Δ)`, with exact zeros moved to [`OPEN_EPS`].
pub fn lattice_point(rule: &LatticeRule, k: u64, shift: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; rule.dim()];
    lattice_point_into(rule, k, shift, &mut out)?;
    Ok(out)
}

fn lattice_point_into(rule: &LatticeRule, k: u64, shift: &[f64], out: &mut [f64]) -> Result<()> {
    if k >= rule.n {
        return Err(Error::OutOfRange { index: k, len: rule.n });
    }
    if shift.len() != rule.dim() {
        return Err(Error::DimensionMismatch {
            what: "shift",
            expected: rule.dim(),
            got: shift.len(),
        });
    }
    let n = rule.n as f64;
    for ((o, &z), &d) in out.iter_mut().zip(&rule.generating_vector).zip(shift) {
        let mut u = ((k * z) % rule.n) as f64 / n + d;
        if u >= 1.0 {
            u -= 1.0;
        }
        *o = clamp_open(u);
    }
    Ok(())
}

/// Componentwise Φ⁻¹ of a point in the open unit cube.
pub fn gaussian_map(point: &[f64]) -> Result<Vec<f64>> {
    point.iter().map(|&u| normal::inv_cdf(u)).collect()
}

/// `R` independent uniform shifts, reproducible from `(seed, R, dim)`:
/// shift `r` is read from ChaCha20 stream `r` of the seeded generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSet {
    seed: u64,
    shifts: Vec<Vec<f64>>,
}

impl ShiftSet {
    pub fn new(count: usize, seed: u64, dim: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("need at least one shift".into()));
        }
        let shifts = (0..count)
            .map(|r| {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                (0..dim).map(|_| rng.random::<f64>()).collect()
            })
            .collect();
        Ok(ShiftSet { seed, shifts })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn shift(&self, r: usize) -> &[f64] {
        &self.shifts[r]
    }
}

/// A family of independent equal-weight point sets in the open unit cube,
/// one per replicate.
pub trait RandomizedPointSet: Sync {
    fn replicates(&self) -> usize;
    fn points(&self) -> usize;
    fn dim(&self) -> usize;
    /// Writes point `k` of replicate `r`.
    fn fill(&self, r: usize, k: usize, out: &mut [f64]) -> Result<()>;
}

/// A lattice rule together with its shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedLattice {
    pub rule: LatticeRule,
    pub shifts: ShiftSet,
}

impl ShiftedLattice {
    pub fn new(rule: LatticeRule, shifts: ShiftSet) -> Result<Self> {
        if shifts.shift(0).len() != rule.dim() {
            return Err(Error::DimensionMismatch {
                what: "shift",
                expected: rule.dim(),
                got: shifts.shift(0).len(),
            });
        }
        Ok(ShiftedLattice { rule, shifts })
    }
}

impl RandomizedPointSet for ShiftedLattice {
    fn replicates(&self) -> usize {
        self.shifts.len()
    }

    fn points(&self) -> usize {
        self.rule.n as usize
    }

    fn dim(&self) -> usize {
        self.rule.dim()
    }

    fn fill(&self, r: usize, k: usize, out: &mut [f64]) -> Result<()> {
        lattice_point_into(&self.rule, k as u64, self.shifts.shift(r), out)
    }
}

/// I.i.d. uniform points, the plain Monte Carlo counterpart of
/// [`ShiftedLattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlainMonteCarlo {
    dim: usize,
    points: usize,
    samples: Vec<Vec<f64>>,
}

impl PlainMonteCarlo {
    pub fn new(points: usize, replicates: usize, seed: u64, dim: usize) -> Result<Self> {
        if points == 0 || replicates == 0 {
            return Err(Error::InvalidArgument("need at least one point and replicate".into()));
        }
        let samples = (0..replicates)
            .map(|r| {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                // streams below 2^32 belong to ShiftSet
                rng.set_stream((1u64 << 32) + r as u64);
                (0..points * dim).map(|_| clamp_open(rng.random::<f64>())).collect()
            })
            .collect();
        Ok(PlainMonteCarlo { dim, points, samples })
    }
}

impl RandomizedPointSet for PlainMonteCarlo {
    fn replicates(&self) -> usize {
        self.samples.len()
    }

    fn points(&self) -> usize {
        self.points
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn fill(&self, r: usize, k: usize, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&self.samples[r][k * self.dim..(k + 1) * self.dim]);
        Ok(())
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Per-replicate averages of a vector-valued integrand over Gaussian space.
///
/// `integrand(y, out)` receives the Φ⁻¹-mapped point and writes `width`
/// values. Points are processed in fixed-size chunks whose compensated sums
/// are merged in chunk order, so the result is bitwise independent of the
/// rayon pool size.
pub fn replicate_means<P, F>(points: &P, width: usize, integrand: F) -> Result<Vec<Vec<f64>>>
where
    P: RandomizedPointSet + ?Sized,
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
{
    let n = points.points();
    let dim = points.dim();
    let chunks = n.div_ceil(CHUNK);
    (0..points.replicates())
        .map(|r| {
            let partials: Vec<Vec<CompensatedSum>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut acc = vec![CompensatedSum::default(); width];
                    let mut u = vec![0.0; dim];
                    let mut y = vec![0.0; dim];
                    let mut out = vec![0.0; width];
                    for k in c * CHUNK..((c + 1) * CHUNK).min(n) {
                        points.fill(r, k, &mut u)?;
                        for (yi, &ui) in y.iter_mut().zip(&u) {
                            *yi = normal::inv_cdf(ui)?;
                        }
                        integrand(&y, &mut out)?;
                        for (a, &v) in acc.iter_mut().zip(&out) {
                            if !v.is_finite() {
                                return Err(Error::NonFinite { value: v, point: y.clone() });
                            }
                            a.add(v);
                        }
                    }
                    Ok(acc)
                })
                .collect::<Result<_>>()?;
            let mut total = vec![CompensatedSum::default(); width];
            for part in &partials {
                for (t, p) in total.iter_mut().zip(part) {
                    t.add(p.value());
                }
            }
            Ok(total.iter().map(|t| t.value() / n as f64).collect())
        })
        .collect()
}

/// Mean over replicates and its standard error `std/√R` (0 when `R = 1`).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Result of a randomized quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub per_shift: Vec<f64>,
}

/// Randomly shifted lattice estimate of `E[g(Y)]`, `Y ~ N(0, I_dim)`.
pub fn randomized_estimate<F>(integrand: F, rule: &LatticeRule, shifts: &ShiftSet) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let set = ShiftedLattice::new(rule.clone(), shifts.clone())?;
    let per_shift: Vec<f64> = replicate_means(&set, 1, |y, out| {
        out[0] = integrand(y);
        Ok(())
    })?
    .into_iter()
    .map(|v| v[0])
    .collect();
    let (mean, stderr) = mean_and_stderr(&per_shift);
    Ok(Estimate {
        mean,
        stderr,
        per_shift,
    })
}

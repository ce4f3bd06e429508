//! End-to-end cdf/pdf estimation, reference estimators and convergence
//! studies.
//!
//! For every quadrature point the Gaussian coordinates are split as
//! `(w_1..w_s, z_1..z_s)`; one FE factorization at `z` yields the QoI
//! components, which are then reused for every `t` and for both the cdf and
//! the pdf.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{FeModel, Qoi, QoiComponents};
use crate::field::FieldSpec;
use crate::mesh::Mesh;
use crate::normal;
use crate::preint::Preintegrand;
use crate::qmc::{self, LatticeRule, PlainMonteCarlo, RandomizedPointSet, ShiftSet, ShiftedLattice};

/// Which curves to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cdf,
    Pdf,
    Both,
}

impl Mode {
    fn cdf(self) -> bool {
        matches!(self, Mode::Cdf | Mode::Both)
    }

    fn pdf(self) -> bool {
        matches!(self, Mode::Pdf | Mode::Both)
    }
}

/// Inputs of one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub spec: FieldSpec,
    pub qoi: Qoi,
    pub dimension: usize,
    pub cells: usize,
    /// Lattice size, prime.
    pub points: u64,
    pub shifts: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub mode: Mode,
    /// CBC product weights; `None` means `γ_j = 1/j²`.
    pub weights: Option<Vec<f64>>,
    /// Fixed generating vector, bypassing CBC.
    pub lattice: Option<LatticeRule>,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl EstimationConfig {
    /// A config with `mode = Both`, CBC with default weights, the global
    /// pool, and an empty t-grid (see [`EstimationConfig::with_default_t_grid`]).
    pub fn new(spec: FieldSpec, qoi: Qoi, dimension: usize, cells: usize, points: u64, shifts: usize, seed: u64) -> Self {
        EstimationConfig {
            spec,
            qoi,
            dimension,
            cells,
            points,
            shifts,
            seed,
            t_grid: Vec::new(),
            mode: Mode::Both,
            weights: None,
            lattice: None,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::InvalidArgument("t grid is empty".into()));
        }
        if self.t_grid.iter().any(|t| !t.is_finite()) || self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("t grid must be finite and strictly increasing".into()));
        }
        if !qmc::is_prime(self.points) {
            return Err(Error::NotPrime(self.points));
        }
        if self.shifts < 2 {
            return Err(Error::InvalidArgument("need at least 2 random shifts".into()));
        }
        if let Some(rule) = &self.lattice {
            if rule.n() != self.points || rule.dim() != 2 * self.spec.s() {
                return Err(Error::InvalidArgument(format!(
                    "generating vector is for N = {}, dim = {}; run needs N = {}, dim = {}",
                    rule.n(),
                    rule.dim(),
                    self.points,
                    2 * self.spec.s()
                )));
            }
        }
        Ok(())
    }

    /// Lattice dimension `2s`.
    pub fn lattice_dim(&self) -> usize {
        2 * self.spec.s()
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::structured(self.dimension, self.cells)
    }

    pub fn model(&self) -> Result<FeModel> {
        FeModel::new(&self.mesh()?, &self.spec, &self.qoi)
    }

    pub fn lattice_rule(&self) -> Result<LatticeRule> {
        match &self.lattice {
            Some(rule) => Ok(rule.clone()),
            None => {
                let dim = self.lattice_dim();
                let weights = self.weights.clone().unwrap_or_else(|| qmc::default_weights(dim));
                LatticeRule::cbc(dim, self.points, weights)
            }
        }
    }

    pub fn point_set(&self) -> Result<ShiftedLattice> {
        ShiftedLattice::new(
            self.lattice_rule()?,
            ShiftSet::new(self.shifts, self.seed, self.lattice_dim())?,
        )
    }

    /// Replaces the t-grid by [`default_t_grid`] from a pilot run.
    pub fn with_default_t_grid(mut self) -> Result<Self> {
        let model = self.model()?;
        let (mu, sigma) = in_pool(self.workers, || pilot_moments(&model, self.seed))?;
        self.t_grid = default_t_grid(mu, sigma, DEFAULT_T_POINTS);
        Ok(self)
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (global pool when 0).
pub fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

pub const DEFAULT_T_POINTS: usize = 33;
const PILOT_POINTS: u64 = 251;
const PILOT_SHIFTS: usize = 4;

/// Mean and standard deviation of `X_h` from a small lattice run, using
/// `E[X] = E[φ̄]` and `E[X²] = E[φ̄² + Σ φ_i²]`.
pub fn pilot_moments(model: &FeModel, seed: u64) -> Result<(f64, f64)> {
    let s = model.spec().s();
    let points = ShiftedLattice::new(
        LatticeRule::cbc(s, PILOT_POINTS, qmc::default_weights(s))?,
        ShiftSet::new(PILOT_SHIFTS, seed, s)?,
    )?;
    let means = qmc::replicate_means(&points, 2, |z, out| {
        let c = model.components(z)?;
        out[0] = c.phibar;
        out[1] = c.phibar * c.phibar + c.phi.iter().map(|p| p * p).sum::<f64>();
        Ok(())
    })?;
    let r = means.len() as f64;
    let m1 = means.iter().map(|m| m[0]).sum::<f64>() / r;
    let m2 = means.iter().map(|m| m[1]).sum::<f64>() / r;
    Ok((m1, (m2 - m1 * m1).max(0.0).sqrt()))
}

/// `points` equispaced values across `μ ± 3σ`.
pub fn default_t_grid(mu: f64, sigma: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (mu - 3.0 * sigma, mu + 3.0 * sigma);
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Provenance of a curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveMetadata {
    pub meshwidth: f64,
    pub points: u64,
    pub shifts: usize,
    pub seed: u64,
    pub wall_time_secs: f64,
}

/// Estimated cdf and pdf on a t-grid. Columns not requested by the mode
/// are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub t: Vec<f64>,
    pub cdf: Vec<f64>,
    pub cdf_stderr: Vec<f64>,
    pub pdf: Vec<f64>,
    pub pdf_stderr: Vec<f64>,
    pub metadata: CurveMetadata,
}

impl DensityCurve {
    /// CSV with header `t,F,F_stderr,f,f_stderr`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,F,F_stderr,f,f_stderr\n");
        for i in 0..self.t.len() {
            let row = [self.t[i], self.cdf[i], self.cdf_stderr[i], self.pdf[i], self.pdf_stderr[i]];
            out.push_str(&row.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

/// Lossless decimal formatting (17 significant digits).
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Per-replicate curves, rows indexed by replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateCurves {
    pub t: Vec<f64>,
    pub cdf: Vec<Vec<f64>>,
    pub pdf: Vec<Vec<f64>>,
}

impl ReplicateCurves {
    pub fn replicates(&self) -> usize {
        self.cdf.len()
    }

    /// Mean and stderr over replicates at every t.
    pub fn summarize(&self, metadata: CurveMetadata) -> DensityCurve {
        let column = |rows: &[Vec<f64>], i: usize| -> Vec<f64> { rows.iter().map(|r| r[i]).collect() };
        let (mut cdf, mut cdf_stderr, mut pdf, mut pdf_stderr) = (vec![], vec![], vec![], vec![]);
        for i in 0..self.t.len() {
            let (m, s) = qmc::mean_and_stderr(&column(&self.cdf, i));
            cdf.push(m);
            cdf_stderr.push(s);
            let (m, s) = qmc::mean_and_stderr(&column(&self.pdf, i));
            pdf.push(m);
            pdf_stderr.push(s);
        }
        DensityCurve {
            t: self.t.clone(),
            cdf,
            cdf_stderr,
            pdf,
            pdf_stderr,
            metadata,
        }
    }
}

/// Preintegrated estimates for every replicate of `points`, with QoI
/// components supplied by `components(z)`.
pub fn estimate_replicates<P, C>(points: &P, s: usize, t_grid: &[f64], mode: Mode, components: C) -> Result<ReplicateCurves>
where
    P: RandomizedPointSet + ?Sized,
    C: Fn(&[f64]) -> Result<QoiComponents> + Sync,
{
    if points.dim() != 2 * s {
        return Err(Error::DimensionMismatch {
            what: "quadrature dimension",
            expected: 2 * s,
            got: points.dim(),
        });
    }
    let nt = t_grid.len();
    let means = qmc::replicate_means(points, 2 * nt, |y, out| {
        let (w_rest, z) = y.split_at(s);
        let comps = components(z)?;
        let p = Preintegrand::new(w_rest, &comps)?;
        let (cdf, pdf) = out.split_at_mut(nt);
        for (i, &t) in t_grid.iter().enumerate() {
            cdf[i] = if mode.cdf() { p.cdf(t) } else { 0.0 };
            pdf[i] = if mode.pdf() { p.pdf(t) } else { 0.0 };
        }
        Ok(())
    })?;
    let pick = |on: bool, range: std::ops::Range<usize>| -> Vec<Vec<f64>> {
        means
            .iter()
            .map(|m| if on { m[range.clone()].to_vec() } else { vec![f64::NAN; nt] })
            .collect()
    };
    Ok(ReplicateCurves {
        t: t_grid.to_vec(),
        cdf: pick(mode.cdf(), 0..nt),
        pdf: pick(mode.pdf(), nt..2 * nt),
    })
}

fn replicates_for(config: &EstimationConfig, model: &FeModel, points: &dyn RandomizedPointSet) -> Result<ReplicateCurves> {
    estimate_replicates(points, config.spec.s(), &config.t_grid, config.mode, |z| model.components(z))
}

/// `F_{h,N}` and `f_{h,N}` on the config's t-grid.
pub fn estimate_density(config: &EstimationConfig) -> Result<DensityCurve> {
    config.validate()?;
    let start = Instant::now();
    let model = config.model()?;
    let curves = in_pool(config.workers, || -> Result<_> {
        let points = config.point_set()?;
        replicates_for(config, &model, &points)
    })?;
    Ok(curves.summarize(CurveMetadata {
        meshwidth: model.mesh().meshwidth(),
        points: config.points,
        shifts: config.shifts,
        seed: config.seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
    }))
}

/// Exact curve when the coefficient is deterministic: `X_h ~ N(φ̄, Σ φ_i²)`.
pub fn gaussian_oracle(comps: &QoiComponents, t_grid: &[f64]) -> Result<DensityCurve> {
    let mu = comps.phibar;
    let sigma = comps.phi.iter().map(|p| p * p).sum::<f64>().sqrt();
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument("oracle variance is zero".into()));
    }
    let nt = t_grid.len();
    Ok(DensityCurve {
        t: t_grid.to_vec(),
        cdf: t_grid.iter().map(|t| normal::cdf((t - mu) / sigma)).collect(),
        cdf_stderr: vec![0.0; nt],
        pdf: t_grid.iter().map(|t| normal::pdf((t - mu) / sigma) / sigma).collect(),
        pdf_stderr: vec![0.0; nt],
        metadata: CurveMetadata {
            meshwidth: f64::NAN,
            points: 0,
            shifts: 0,
            seed: 0,
            wall_time_secs: 0.0,
        },
    })
}

pub const MIN_MC_SAMPLES: usize = 1000;
const MC_CHUNK: usize = 1024;

/// Draws `sample_count` values of `X_h = φ̄(z) + Σ_i w_i φ_i(z)` with
/// `(w, z) ~ N(0, I_{2s+1})`. Chunk `c` uses ChaCha20 stream `2^40 + c`.
pub fn sample_qoi<C>(s: usize, sample_count: usize, seed: u64, components: C) -> Result<Vec<f64>>
where
    C: Fn(&[f64]) -> Result<QoiComponents> + Sync,
{
    let chunks = sample_count.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream((1u64 << 40) + c as u64);
            let count = MC_CHUNK.min(sample_count - c * MC_CHUNK);
            let mut y = vec![0.0; 2 * s + 1];
            (0..count)
                .map(|_| {
                    for v in y.iter_mut() {
                        *v = StandardNormal.sample(&mut rng);
                    }
                    let (w, z) = y.split_at(s + 1);
                    Ok(components(z)?.value(w))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(parts.concat())
}

/// Plain Monte Carlo reference: indicator averages for the cdf with binomial
/// standard errors, and the centered difference of the empirical cdf with
/// half-width `δ = 0.5 σ̂ n^{-1/5}` for the pdf (bias `O(δ²)`).
pub fn mc_reference_with<C>(s: usize, t_grid: &[f64], sample_count: usize, seed: u64, components: C) -> Result<DensityCurve>
where
    C: Fn(&[f64]) -> Result<QoiComponents> + Sync,
{
    if sample_count < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo reference needs at least {MIN_MC_SAMPLES} samples, got {sample_count}"
        )));
    }
    let start = Instant::now();
    let mut x = sample_qoi(s, sample_count, seed, components)?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    x.sort_by(f64::total_cmp);
    let below = |t: f64| x.partition_point(|&v| v <= t) as f64;
    let delta = 0.5 * sd * n.powf(-0.2);
    let (mut cdf, mut cdf_stderr, mut pdf, mut pdf_stderr) = (vec![], vec![], vec![], vec![]);
    for &t in t_grid {
        let p = below(t) / n;
        cdf.push(p);
        cdf_stderr.push((p * (1.0 - p) / n).sqrt());
        let q = (below(t + delta) - below(t - delta)) / n;
        pdf.push(q / (2.0 * delta));
        pdf_stderr.push((q * (1.0 - q) / n).sqrt() / (2.0 * delta));
    }
    Ok(DensityCurve {
        t: t_grid.to_vec(),
        cdf,
        cdf_stderr,
        pdf,
        pdf_stderr,
        metadata: CurveMetadata {
            meshwidth: f64::NAN,
            points: sample_count as u64,
            shifts: 1,
            seed,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    })
}

/// [`mc_reference_with`] on the config's mesh, field and QoI.
pub fn mc_reference(config: &EstimationConfig, sample_count: usize) -> Result<DensityCurve> {
    let model = config.model()?;
    let mut curve = in_pool(config.workers, || {
        mc_reference_with(config.spec.s(), &config.t_grid, sample_count, config.seed, |z| model.components(z))
    })?;
    curve.metadata.meshwidth = model.mesh().meshwidth();
    Ok(curve)
}

/// Convergence study direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyAxis {
    /// Levels are cells per side; the error is the max over t of the
    /// difference to a finer reference mesh, using the same points.
    Mesh,
    /// Levels are point counts; the error is the max over t of the RMSE over
    /// replicates against the reference curve.
    Points,
}

/// Quadrature used along the points axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Lattice,
    PlainMonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    /// Cells per side of the reference mesh (mesh axis). Defaults to 8× the
    /// finest level.
    pub reference_cells: Option<usize>,
    pub sampler: Sampler,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            reference_cells: None,
            sampler: Sampler::Lattice,
        }
    }
}

/// One row of a study table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub level: u64,
    /// Meshwidth (mesh axis) or point count (points axis).
    pub value: f64,
    pub error: f64,
    pub stderr: f64,
    /// Least-squares log–log slope over this and all previous rows.
    pub slope_running: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseError {
    pub level: u64,
    pub t: f64,
    pub cdf_error: f64,
    pub pdf_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub axis: StudyAxis,
    pub reference: String,
    pub cdf: Vec<StudyRow>,
    pub pdf: Vec<StudyRow>,
    pub cdf_slope: f64,
    pub pdf_slope: f64,
    pub pointwise: Vec<PointwiseError>,
}

impl StudyResult {
    /// CSV with header `level,value,error,stderr,slope_running`.
    pub fn table_csv(rows: &[StudyRow]) -> String {
        let mut out = String::from("level,value,error,stderr,slope_running\n");
        for r in rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.level,
                fmt17(r.value),
                fmt17(r.error),
                fmt17(r.stderr),
                fmt17(r.slope_running)
            ));
        }
        out
    }

    pub fn pointwise_csv(&self) -> String {
        let mut out = String::from("level,t,F_error,f_error\n");
        for p in &self.pointwise {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.level,
                fmt17(p.t),
                fmt17(p.cdf_error),
                fmt17(p.pdf_error)
            ));
        }
        out
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Per-level errors of one target against a reference.
struct LevelErrors {
    pointwise: Vec<f64>,
    worst: usize,
    stderr: f64,
}

/// Max over t of |mean difference|, with the stderr of the per-replicate
/// differences at the maximizing t.
fn paired_error(level: &[Vec<f64>], reference: &[Vec<f64>]) -> LevelErrors {
    let nt = level[0].len();
    let mut pointwise = Vec::with_capacity(nt);
    let mut stderrs = Vec::with_capacity(nt);
    for i in 0..nt {
        let diffs: Vec<f64> = level.iter().zip(reference).map(|(a, b)| a[i] - b[i]).collect();
        let (m, s) = qmc::mean_and_stderr(&diffs);
        pointwise.push(m.abs());
        stderrs.push(s);
    }
    let worst = argmax(&pointwise);
    LevelErrors {
        stderr: stderrs[worst],
        pointwise,
        worst,
    }
}

/// Max over t of the root-mean-square error over replicates against a fixed
/// curve; stderr of the replicate mean at the maximizing t.
fn rmse_error(level: &[Vec<f64>], reference: &[f64]) -> LevelErrors {
    let nt = reference.len();
    let r = level.len() as f64;
    let mut pointwise = Vec::with_capacity(nt);
    let mut stderrs = Vec::with_capacity(nt);
    for i in 0..nt {
        let col: Vec<f64> = level.iter().map(|row| row[i]).collect();
        pointwise.push((col.iter().map(|v| (v - reference[i]).powi(2)).sum::<f64>() / r).sqrt());
        stderrs.push(qmc::mean_and_stderr(&col).1);
    }
    let worst = argmax(&pointwise);
    LevelErrors {
        stderr: stderrs[worst],
        pointwise,
        worst,
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn rows_from(levels: &[u64], values: &[f64], errors: &[LevelErrors]) -> (Vec<StudyRow>, f64) {
    let errs: Vec<f64> = errors.iter().map(|e| e.pointwise[e.worst]).collect();
    let rows = (0..levels.len())
        .map(|i| StudyRow {
            level: levels[i],
            value: values[i],
            error: errs[i],
            stderr: errors[i].stderr,
            slope_running: if i == 0 {
                f64::NAN
            } else {
                fit_loglog_slope(&values[..=i], &errs[..=i])
            },
        })
        .collect();
    (rows, fit_loglog_slope(values, &errs))
}

/// Convergence of the cdf and pdf estimates along one axis.
///
/// Mesh axis: `levels` are cells per side, each run with the config's
/// lattice and shifts, compared with the same points on the reference mesh.
/// Points axis: `levels` are prime point counts on the config's mesh; the
/// reference is the Gaussian closed form when the coefficient is
/// deterministic, and otherwise the largest level (which is then dropped
/// from the table).
pub fn convergence_study(config: &EstimationConfig, axis: StudyAxis, levels: &[u64], options: &StudyOptions) -> Result<StudyResult> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument("a convergence study needs at least 3 levels".into()));
    }
    let mut probe = config.clone();
    if axis == StudyAxis::Points {
        probe.points = levels[0];
    }
    probe.validate()?;
    in_pool(config.workers, || match axis {
        StudyAxis::Mesh => mesh_study(config, levels, options),
        StudyAxis::Points => points_study(config, levels, options),
    })
}

fn mesh_study(config: &EstimationConfig, levels: &[u64], options: &StudyOptions) -> Result<StudyResult> {
    let finest = *levels.iter().max().expect("nonempty") as usize;
    let reference_cells = options.reference_cells.unwrap_or(8 * finest);
    if reference_cells < 4 * finest {
        return Err(Error::InvalidArgument(format!(
            "reference mesh ({reference_cells} cells) must be at least 4x finer than the finest level ({finest})"
        )));
    }
    let points = config.point_set()?;
    let run = |cells: usize| -> Result<(f64, ReplicateCurves)> {
        let mut c = config.clone();
        c.cells = cells;
        let model = c.model()?;
        Ok((model.mesh().meshwidth(), replicates_for(&c, &model, &points)?))
    };
    let (_, reference) = run(reference_cells)?;
    let (mut values, mut cdf_err, mut pdf_err) = (vec![], vec![], vec![]);
    for &cells in levels {
        let (h, curves) = run(cells as usize)?;
        values.push(h);
        cdf_err.push(paired_error(&curves.cdf, &reference.cdf));
        pdf_err.push(paired_error(&curves.pdf, &reference.pdf));
    }
    Ok(finish(
        StudyAxis::Mesh,
        format!("mesh with {reference_cells} cells per side"),
        levels,
        &values,
        &config.t_grid,
        cdf_err,
        pdf_err,
    ))
}

fn points_study(config: &EstimationConfig, levels: &[u64], options: &StudyOptions) -> Result<StudyResult> {
    let model = config.model()?;
    let dim = config.lattice_dim();
    let run = |n: u64| -> Result<ReplicateCurves> {
        let mut c = config.clone();
        c.points = n;
        c.lattice = None;
        match options.sampler {
            Sampler::Lattice => replicates_for(&c, &model, &c.point_set()?),
            Sampler::PlainMonteCarlo => {
                replicates_for(&c, &model, &PlainMonteCarlo::new(n as usize, c.shifts, c.seed, dim)?)
            }
        }
    };
    let (reference, label, study_levels): (DensityCurve, String, &[u64]) = if config.spec.is_coefficient_deterministic() {
        let comps = model.components(&vec![0.0; config.spec.s()])?;
        (gaussian_oracle(&comps, &config.t_grid)?, "gaussian closed form".into(), levels)
    } else {
        let (last, rest) = levels.split_last().expect("nonempty");
        if rest.len() < 3 {
            return Err(Error::InvalidArgument(
                "without a closed-form reference the largest level is the reference; need 4 levels".into(),
            ));
        }
        let reference = run(*last)?.summarize(CurveMetadata {
            meshwidth: model.mesh().meshwidth(),
            points: *last,
            shifts: config.shifts,
            seed: config.seed,
            wall_time_secs: 0.0,
        });
        (reference, format!("N = {last}"), rest)
    };
    let (mut values, mut cdf_err, mut pdf_err) = (vec![], vec![], vec![]);
    for &n in study_levels {
        let curves = run(n)?;
        values.push(n as f64);
        cdf_err.push(rmse_error(&curves.cdf, &reference.cdf));
        pdf_err.push(rmse_error(&curves.pdf, &reference.pdf));
    }
    Ok(finish(StudyAxis::Points, label, study_levels, &values, &config.t_grid, cdf_err, pdf_err))
}

fn finish(
    axis: StudyAxis,
    reference: String,
    levels: &[u64],
    values: &[f64],
    t_grid: &[f64],
    cdf_err: Vec<LevelErrors>,
    pdf_err: Vec<LevelErrors>,
) -> StudyResult {
    let pointwise = levels
        .iter()
        .enumerate()
        .flat_map(|(l, &level)| {
            let (c, p) = (&cdf_err[l], &pdf_err[l]);
            t_grid.iter().enumerate().map(move |(i, &t)| PointwiseError {
                level,
                t,
                cdf_error: c.pointwise[i],
                pdf_error: p.pointwise[i],
            })
        })
        .collect();
    let (cdf, cdf_slope) = rows_from(levels, values, &cdf_err);
    let (pdf, pdf_slope) = rows_from(levels, values, &pdf_err);
    StudyResult {
        axis,
        reference,
        cdf,
        pdf,
        cdf_slope,
        pdf_slope,
        pointwise,
    }
}

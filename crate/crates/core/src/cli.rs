//! Command-line front end.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 invalid configuration,
//! 3 monotonicity failure, 4 other numerical failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::Error;
use crate::estimator::{self, EstimationConfig, StudyAxis, StudyResult};
use crate::fem::verify_nonnegative_type;

#[derive(Debug, Parser)]
#[command(name = "fepreint", version, about = "Preintegrated lattice QMC estimates of the cdf and pdf of an FE quantity of interest")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set mesh.cells=128`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Prefix prepended to every output file name.
    #[arg(long, value_name = "PREFIX", default_value = "", global = true)]
    pub out: String,
    /// Replaces `qmc.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0, global = true)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Estimate the cdf and pdf on a t-grid.
    Estimate,
    /// Mesh convergence study.
    StudyH,
    /// Point-count convergence study.
    StudyN,
    /// Run the invariant checks and print pass/fail per check.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::StudyH => "study-h",
            Command::StudyN => "study-n",
            Command::Validate => "validate",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Monotonicity { .. } => 3,
        Error::NotPositiveDefinite { .. } | Error::Residual { .. } | Error::NonFinite { .. } | Error::Domain { .. } => 4,
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Prepared {
    config: RunConfig,
    estimation: EstimationConfig,
}

fn prepare(cli: &Cli) -> crate::Result<Prepared> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("qmc.seed={seed}"));
    }
    let config = RunConfig::load(path, &overrides)?;
    let estimation = config.estimation(path.parent(), cli.workers)?;
    Ok(Prepared {
        config: config.resolved(&estimation),
        estimation,
    })
}

fn write(path: String, contents: &str) -> crate::Result<()> {
    let p = Path::new(&path);
    if let Some(dir) = p.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(p, contents).map_err(|e| Error::Io(format!("{path}: {e}")))
}

fn write_meta(cli: &Cli, p: &Prepared, extra: serde_json::Value) -> crate::Result<()> {
    let meta = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": p.estimation.seed,
        "workers": cli.workers,
        "config": p.config,
        "result": extra,
    });
    write(format!("{}meta.json", cli.out), &serde_json::to_string_pretty(&meta).expect("json"))?;
    write(format!("{}config.toml", cli.out), &p.config.to_toml())
}

fn execute(cli: &Cli) -> crate::Result<i32> {
    let p = prepare(cli)?;
    match cli.command {
        Command::Estimate => {
            let curve = estimator::estimate_density(&p.estimation)?;
            write(format!("{}curve.csv", cli.out), &curve.to_csv())?;
            write_meta(cli, &p, json!({ "metadata": curve.metadata }))?;
            Ok(0)
        }
        Command::StudyH | Command::StudyN => {
            let (axis, levels, tag) = if cli.command == Command::StudyH {
                (StudyAxis::Mesh, &p.config.study.mesh_levels, "study_h")
            } else {
                (StudyAxis::Points, &p.config.study.point_levels, "study_n")
            };
            let study = estimator::convergence_study(&p.estimation, axis, levels, &p.config.study_options())?;
            write(format!("{}{tag}_F.csv", cli.out), &StudyResult::table_csv(&study.cdf))?;
            write(format!("{}{tag}_f.csv", cli.out), &StudyResult::table_csv(&study.pdf))?;
            write(format!("{}{tag}_pointwise.csv", cli.out), &study.pointwise_csv())?;
            println!("reference: {}", study.reference);
            println!("cdf slope {:.3}, pdf slope {:.3}", study.cdf_slope, study.pdf_slope);
            write_meta(
                cli,
                &p,
                json!({ "reference": study.reference, "cdf_slope": study.cdf_slope, "pdf_slope": study.pdf_slope }),
            )?;
            Ok(0)
        }
        Command::Validate => validate(cli, &p),
    }
}

const VALIDATE_STIFFNESS_SAMPLES: usize = 20;
const VALIDATE_MONOTONICITY_SAMPLES: usize = 1000;

fn validate(cli: &Cli, p: &Prepared) -> crate::Result<i32> {
    let c = &p.estimation;
    let model = c.model()?;
    let s = c.spec.s();
    let mut rng = ChaCha20Rng::seed_from_u64(c.seed);
    let mut draw = || -> Vec<f64> { (0..s).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let mut checks: Vec<(&str, bool, String)> = Vec::new();

    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..VALIDATE_STIFFNESS_SAMPLES {
        let report = verify_nonnegative_type(&model.stiffness(&draw())?);
        ok &= report.passed();
        worst = worst.max(report.worst_violation);
    }
    checks.push(("nonnegative type", ok, format!("{VALIDATE_STIFFNESS_SAMPLES} z, largest sign excess {worst:.2e}")));

    let zs: Vec<Vec<f64>> = (0..VALIDATE_MONOTONICITY_SAMPLES).map(|_| draw()).collect();
    let mut monotone = true;
    let mut min_phi0 = f64::INFINITY;
    for z in &zs {
        match model.components(z) {
            Ok(comps) => min_phi0 = min_phi0.min(comps.phi[0]),
            Err(Error::Monotonicity { phi0, .. }) => {
                monotone = false;
                min_phi0 = min_phi0.min(phi0);
            }
            Err(e) => return Err(e),
        }
    }
    checks.push(("monotonicity", monotone, format!("{VALIDATE_MONOTONICITY_SAMPLES} z, min phi0 {min_phi0:e}")));

    if monotone {
        let curve = estimator::estimate_density(c)?;
        let mc = estimator::mc_reference(c, p.config.study.mc_samples)?;
        let worst_ratio = curve
            .cdf
            .iter()
            .zip(&mc.cdf)
            .zip(curve.cdf_stderr.iter().zip(&mc.cdf_stderr))
            .map(|((a, b), (sa, sb))| (a - b).abs() / (sa * sa + sb * sb).sqrt().max(1e-300))
            .fold(0.0, f64::max);
        checks.push((
            "oracle agreement (cdf vs Monte Carlo)",
            worst_ratio <= 3.0,
            format!("{} samples, worst |diff|/stderr {worst_ratio:.3}", p.config.study.mc_samples),
        ));
        if c.spec.is_coefficient_deterministic() {
            let exact = estimator::gaussian_oracle(&model.components(&vec![0.0; s])?, &c.t_grid)?;
            let worst = (0..c.t_grid.len())
                .map(|i| {
                    let a = (curve.cdf[i] - exact.cdf[i]).abs() / (3.0 * curve.cdf_stderr[i] + 1e-10);
                    let b = (curve.pdf[i] - exact.pdf[i]).abs() / (3.0 * curve.pdf_stderr[i] + 1e-10);
                    a.max(b)
                })
                .fold(0.0, f64::max);
            checks.push((
                "gaussian closed form",
                worst <= 1.0,
                format!("{} grid points, worst error/(3 stderr + 1e-10) {worst:.3}", c.t_grid.len()),
            ));
        }
    }

    let mut report = String::new();
    for (name, pass, detail) in &checks {
        report.push_str(&format!("{} {name}: {detail}\n", if *pass { "PASS" } else { "FAIL" }));
    }
    print!("{report}");
    write(format!("{}validate.txt", cli.out), &report)?;
    write_meta(
        cli,
        p,
        json!({ "checks": checks.iter().map(|(n, pass, d)| json!({"name": n, "pass": pass, "detail": d})).collect::<Vec<_>>() }),
    )?;
    Ok(if !monotone {
        3
    } else if checks.iter().all(|c| c.1) {
        0
    } else {
        4
    })
}

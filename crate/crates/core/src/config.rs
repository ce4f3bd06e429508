//! Run configuration: a TOML document with the sections `field`, `qoi`,
//! `mesh`, `qmc`, `estimate` and `study`. Unknown keys are rejected.
//!
//! ```toml
//! [field]
//! preset = "lognormal"       # or "constant"
//! s = 2
//! # optional overrides, each a field string such as "sine 0.1 1 2"
//! # a0 = "constant 0"
//! # a = ["sine 0.1 1 2", "sine 0.1 2 2"]
//! # ell_bar = "constant 1"
//! # ell = ["constant 1", "sine 0.2 1 2", "sine 0.2 2 2"]
//!
//! [qoi]
//! kind = "mean"              # mean | point | weighted
//! # point = [0.5]
//! # weight = "polynomial 0 4 -4"
//!
//! [mesh]
//! dimension = 1
//! cells = 64
//!
//! [qmc]
//! n = 8209
//! shifts = 16
//! seed = 1
//! # weights = [1.0, 0.25, ...]
//! # generating_vector = "z.txt"
//!
//! [estimate]
//! mode = "both"              # cdf | pdf | both
//! # t = [0.0, 0.01, 0.02]    # explicit grid
//! # t_min = 0.0, t_max = 0.2, t_points = 33
//!
//! [study]
//! mesh_levels = [8, 16, 32, 64]
//! reference_cells = 512
//! point_levels = [67, 127, 257, 521, 1031]
//! sampler = "lattice"        # lattice | plain_monte_carlo
//! mc_samples = 100000
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{self, EstimationConfig, Mode, Sampler, StudyOptions};
use crate::fem::Qoi;
use crate::field::{FieldSpec, ScalarField};
use crate::qmc::LatticeRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldSection,
    #[serde(default)]
    pub qoi: QoiSection,
    pub mesh: MeshSection,
    pub qmc: QmcSection,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Lognormal,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub preset: Preset,
    pub s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell_bar: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QoiKind {
    #[default]
    Mean,
    Point,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QoiSection {
    #[serde(default)]
    pub kind: QoiKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub dimension: usize,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmcSection {
    pub n: u64,
    pub shifts: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generating_vector: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_points: Option<usize>,
}

fn default_mode() -> Mode {
    Mode::Both
}

impl Default for EstimateSection {
    fn default() -> Self {
        EstimateSection {
            mode: Mode::Both,
            t: None,
            t_min: None,
            t_max: None,
            t_points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default = "default_mesh_levels")]
    pub mesh_levels: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cells: Option<usize>,
    #[serde(default = "default_point_levels")]
    pub point_levels: Vec<u64>,
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

fn default_mesh_levels() -> Vec<u64> {
    vec![8, 16, 32, 64]
}

fn default_point_levels() -> Vec<u64> {
    vec![67, 127, 257, 521, 1031, 2053]
}

fn default_sampler() -> Sampler {
    Sampler::Lattice
}

fn default_mc_samples() -> usize {
    100_000
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            mesh_levels: default_mesh_levels(),
            reference_cells: None,
            point_levels: default_point_levels(),
            sampler: default_sampler(),
            mc_samples: default_mc_samples(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

fn parse_field(key: &str, text: &str) -> Result<ScalarField> {
    text.parse::<ScalarField>()
        .map_err(|e| Error::Config(format!("{key}: {e}")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    /// Parses `text`, applies `key=value` overrides (dotted keys), then
    /// deserializes.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(config_err)?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        toml::Value::Table(doc).try_into().map_err(config_err)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn field_spec(&self) -> Result<FieldSpec> {
        let f = &self.field;
        if f.s == 0 {
            return Err(Error::Config("field.s must be at least 1".into()));
        }
        let base = match f.preset {
            Preset::Lognormal => FieldSpec::lognormal_fixture(f.s),
            Preset::Constant => FieldSpec::constant_fixture(f.s),
        };
        let a0 = match &f.a0 {
            Some(t) => parse_field("field.a0", t)?,
            None => base.a0().clone(),
        };
        let a = match &f.a {
            Some(v) => v.iter().map(|t| parse_field("field.a", t)).collect::<Result<_>>()?,
            None => base.a_modes().to_vec(),
        };
        let ell_bar = match &f.ell_bar {
            Some(t) => parse_field("field.ell_bar", t)?,
            None => base.ell_bar().clone(),
        };
        let ell = match &f.ell {
            Some(v) => v.iter().map(|t| parse_field("field.ell", t)).collect::<Result<_>>()?,
            None => base.ell_modes().to_vec(),
        };
        FieldSpec::new(a0, a, ell_bar, ell).map_err(|e| Error::Config(format!("field: {e}")))
    }

    pub fn qoi(&self) -> Result<Qoi> {
        match self.qoi.kind {
            QoiKind::Mean => Ok(Qoi::MeanValue),
            QoiKind::Point => self
                .qoi
                .point
                .clone()
                .map(Qoi::PointValue)
                .ok_or_else(|| Error::Config("qoi.point is required for kind = \"point\"".into())),
            QoiKind::Weighted => {
                let g = self
                    .qoi
                    .weight
                    .as_deref()
                    .ok_or_else(|| Error::Config("qoi.weight is required for kind = \"weighted\"".into()))?;
                Ok(Qoi::WeightedMean(parse_field("qoi.weight", g)?))
            }
        }
    }

    /// Everything except the t-grid, which [`RunConfig::estimation`] fills.
    fn base_estimation(&self, base_dir: Option<&Path>) -> Result<EstimationConfig> {
        if !matches!(self.mesh.dimension, 1 | 2) {
            return Err(Error::Config(format!("mesh.dimension must be 1 or 2, got {}", self.mesh.dimension)));
        }
        let mut c = EstimationConfig::new(
            self.field_spec()?,
            self.qoi()?,
            self.mesh.dimension,
            self.mesh.cells,
            self.qmc.n,
            self.qmc.shifts,
            self.qmc.seed,
        );
        c.mode = self.estimate.mode;
        c.weights = self.qmc.weights.clone();
        if let Some(w) = &c.weights {
            if w.len() != c.lattice_dim() || w.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
                return Err(Error::Config(format!(
                    "qmc.weights needs {} positive entries",
                    c.lattice_dim()
                )));
            }
        }
        if let Some(path) = &self.qmc.generating_vector {
            let full = match base_dir {
                Some(dir) => dir.join(path),
                None => path.into(),
            };
            let text = std::fs::read_to_string(&full)
                .map_err(|e| Error::Config(format!("qmc.generating_vector {}: {e}", full.display())))?;
            c.lattice = Some(LatticeRule::from_text(&text).map_err(|e| Error::Config(format!("qmc.generating_vector: {e}")))?);
        }
        // mesh and QoI checks happen here so they report as configuration errors
        c.model().map_err(|e| Error::Config(format!("mesh/qoi: {e}")))?;
        Ok(c)
    }

    /// Resolved estimation inputs. Without an explicit grid, `t_min`/`t_max`
    /// (33 points unless `t_points` is set) are used, and otherwise the grid
    /// spans a pilot estimate of mean ± 3 standard deviations.
    pub fn estimation(&self, base_dir: Option<&Path>, workers: usize) -> Result<EstimationConfig> {
        let mut c = self.base_estimation(base_dir)?;
        c.workers = workers;
        let e = &self.estimate;
        c.t_grid = match (&e.t, e.t_min, e.t_max) {
            (Some(t), None, None) if e.t_points.is_none() => t.clone(),
            (Some(_), _, _) => return Err(Error::Config("estimate.t excludes t_min/t_max/t_points".into())),
            (None, Some(lo), Some(hi)) => {
                let n = e.t_points.unwrap_or(estimator::DEFAULT_T_POINTS);
                if n < 2 || !(hi > lo) {
                    return Err(Error::Config("estimate needs t_max > t_min and t_points >= 2".into()));
                }
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
            (None, None, None) => return c.with_default_t_grid(),
            _ => return Err(Error::Config("estimate.t_min and estimate.t_max go together".into())),
        };
        c.validate().map_err(|e| Error::Config(format!("estimate: {e}")))?;
        Ok(c)
    }

    /// The same config with the t-grid written out explicitly, so that
    /// re-running it skips the pilot and reproduces the outputs exactly.
    pub fn resolved(&self, estimation: &EstimationConfig) -> RunConfig {
        let mut r = self.clone();
        r.estimate.t = Some(estimation.t_grid.clone());
        r.estimate.t_min = None;
        r.estimate.t_max = None;
        r.estimate.t_points = None;
        r
    }

    pub fn study_options(&self) -> StudyOptions {
        StudyOptions {
            reference_cells: self.study.reference_cells,
            sampler: self.study.sampler,
        }
    }
}

/// Sets `key` (dotted path) to `value`, parsed as a TOML value when
/// possible and as a bare string otherwise.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let (key, raw) = (key.trim(), raw.trim());
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut table = doc;
    for p in &parts[..parts.len() - 1] {
        table = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}`: `{p}` is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[field]
preset = "lognormal"
s = 2

[mesh]
dimension = 1
cells = 16

[qmc]
n = 127
shifts = 4
seed = 3

[estimate]
t_min = 0.0
t_max = 0.2
t_points = 5
"#;

    #[test]
    fn parses_and_resolves() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.qoi.kind, QoiKind::Mean);
        let e = c.estimation(None, 0).unwrap();
        assert_eq!(e.t_grid.len(), 5);
        assert_eq!(e.t_grid[4], 0.2);
        assert_eq!(e.spec, FieldSpec::lognormal_fixture(2));
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SAMPLE.replace("cells = 16", "cells = 16\ncell = 3");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::Config(_))));
        assert!(RunConfig::from_toml_with_overrides(SAMPLE, &["qmc.bogus=1".into()]).is_err());
    }

    #[test]
    fn overrides() {
        let c = RunConfig::from_toml_with_overrides(
            SAMPLE,
            &["mesh.cells=32".into(), "field.preset=constant".into(), "estimate.mode = cdf".into()],
        )
        .unwrap();
        assert_eq!(c.mesh.cells, 32);
        assert_eq!(c.field.preset, Preset::Constant);
        assert_eq!(c.estimate.mode, Mode::Cdf);
        assert!(RunConfig::from_toml_with_overrides(SAMPLE, &["nokey".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides(SAMPLE, &["mesh.cells.x=1".into()]).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for o in ["qmc.n=128", "mesh.dimension=3", "qoi.kind=point", "field.a0=\"sine 1\"", "qmc.shifts=1"] {
            let c = RunConfig::from_toml_with_overrides(SAMPLE, &[o.into()]).unwrap();
            assert!(matches!(c.estimation(None, 0), Err(Error::Config(_))), "{o}");
        }
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        let e = c.estimation(None, 0).unwrap();
        let r = c.resolved(&e);
        let back = RunConfig::from_toml(&r.to_toml()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.estimation(None, 0).unwrap(), e);
    }
}

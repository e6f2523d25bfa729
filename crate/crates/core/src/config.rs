//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::csa::{CsaParams, ShiftGridSpec, WidthRule};
use crate::diagnostics::DiagnosticsParams;
use crate::error::{Error, Result};
use crate::nearfield::MaskDomain;
use crate::noise::NoiseSpec;
use crate::separation::SeparationParams;
use crate::sphere::MeshSpec;
use crate::wavefield::{sphere_points, GaussianPointSource, Source, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub sources: Vec<Source>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub separation: SeparationParams,
    #[serde(default)]
    pub csa: CsaSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nearfield: Option<NearfieldConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsParams,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_c0() -> f64 {
    crate::DEFAULT_C0
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            c0: default_c0(),
            time: TimeGrid::default(),
            mesh: MeshSpec::default(),
            sources: Vec::new(),
            noise: NoiseSpec::default(),
            separation: SeparationParams::default(),
            csa: CsaSection::default(),
            nearfield: None,
            diagnostics: DiagnosticsParams::default(),
            output: default_output(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsaSection {
    pub denominator: usize,
    pub j_max: usize,
    pub width_rule: WidthRule,
}

impl Default for CsaSection {
    fn default() -> Self {
        let g = ShiftGridSpec::default();
        Self {
            denominator: g.denominator,
            j_max: g.j_max,
            width_rule: WidthRule::default(),
        }
    }
}

/// Measurement sphere, candidate lattice and mask time grid of the
/// near-field experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearfieldConfig {
    #[serde(default)]
    pub sources: Vec<GaussianPointSource>,
    pub boundary: BoundarySpec,
    pub lattice: LatticeSpec,
    pub mask_time: TimeGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub count: usize,
}

impl BoundarySpec {
    pub fn points(&self) -> Vec<Vector3<f64>> {
        sphere_points(&self.center, self.radius, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub center: Vector3<f64>,
    pub half_extent: f64,
    pub n: usize,
}

impl NearfieldConfig {
    pub fn domain(&self) -> Result<MaskDomain> {
        MaskDomain::new(
            self.mask_time,
            MaskDomain::cube_lattice(&self.lattice.center, self.lattice.half_extent, self.lattice.n),
        )
    }
}

fn check(ok: bool, path: impl Into<String>, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message))
    }
}

fn check_grid(g: &TimeGrid, path: &str) -> Result<()> {
    check(g.count >= 2, format!("{path}.count"), "must be at least 2")?;
    check(
        g.t_min.is_finite() && g.t_max.is_finite() && g.t_max > g.t_min,
        format!("{path}.t_max"),
        "must be finite and greater than t_min",
    )
}

fn check_vector(v: &Vector3<f64>, path: String) -> Result<()> {
    check(v.iter().all(|x| x.is_finite()), path, "must be finite")
}

fn check_gaussian(s: &GaussianPointSource, path: &str) -> Result<()> {
    check_vector(&s.position, format!("{path}.position"))?;
    check(s.shift.is_finite(), format!("{path}.shift"), "must be finite")?;
    check(s.rate > 0.0, format!("{path}.rate"), "must be positive")?;
    check(s.half_width > 0.0, format!("{path}.half_width"), "must be positive")?;
    check(s.amplitude.is_finite(), format!("{path}.amplitude"), "must be finite")
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        check(self.c0 > 0.0 && self.c0.is_finite(), "c0", "must be positive and finite")?;
        check_grid(&self.time, "time")?;
        check(self.mesh.n_lat >= 2, "mesh.n_lat", "must be at least 2")?;
        check(self.mesh.n_lon >= 3, "mesh.n_lon", "must be at least 3")?;
        for (i, s) in self.sources.iter().enumerate() {
            let path = format!("sources[{i}]");
            match s {
                Source::Gaussian(g) => check_gaussian(g, &path)?,
                Source::Moving(m) => {
                    check(m.window_end > m.window_start, format!("{path}.window_end"), "must exceed window_start")?;
                    check(m.rate > 0.0, format!("{path}.rate"), "must be positive")?;
                    m.validate(self.c0)
                        .map_err(|e| Error::config(format!("{path}.trajectory"), e.to_string()))?;
                }
            }
        }
        check(
            self.noise.level >= 0.0 && self.noise.level.is_finite(),
            "noise.level",
            "must be finite and non-negative",
        )?;
        let sep = &self.separation;
        check(
            sep.n_lead >= 1 && sep.n_lead <= self.time.count,
            "separation.n_lead",
            format!("must lie in 1..={}", self.time.count),
        )?;
        check(sep.factor > 0.0, "separation.factor", "must be positive")?;
        check(
            sep.max_gap >= self.time.step(),
            "separation.max_gap",
            "must be at least one time step",
        )?;
        check(self.csa.denominator >= 1, "csa.denominator", "must be positive")?;
        if let Some(nf) = &self.nearfield {
            for (i, s) in nf.sources.iter().enumerate() {
                check_gaussian(s, &format!("nearfield.sources[{i}]"))?;
            }
            check_vector(&nf.boundary.center, "nearfield.boundary.center".into())?;
            check(nf.boundary.radius > 0.0, "nearfield.boundary.radius", "must be positive")?;
            check(nf.boundary.count >= 1, "nearfield.boundary.count", "must be positive")?;
            check_vector(&nf.lattice.center, "nearfield.lattice.center".into())?;
            check(nf.lattice.half_extent >= 0.0, "nearfield.lattice.half_extent", "must be non-negative")?;
            check(nf.lattice.n >= 1, "nearfield.lattice.n", "must be positive")?;
            check_grid(&nf.mask_time, "nearfield.mask_time")?;
            if let Some(tol) = nf.tol {
                check(tol >= 0.0, "nearfield.tol", "must be non-negative")?;
            }
        }
        check(self.diagnostics.rel_tol > 0.0, "diagnostics.rel_tol", "must be positive")?;
        Ok(())
    }

    pub fn csa_params(&self) -> CsaParams {
        CsaParams {
            separation: self.separation,
            grid: ShiftGridSpec {
                denominator: self.csa.denominator,
                j_max: self.csa.j_max,
            },
            width_rule: self.csa.width_rule,
        }
    }
}

//! Configuration-driven stages behind the command-line front end.
//!
//! Every stage writes its artifacts into an output directory and returns the
//! summary it serialized.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::csa::{run_csa, ConeEstimate, WidthRule};
use crate::diagnostics::{friedlander_report, FriedlanderReport};
use crate::error::{Error, Result};
use crate::geometry::{ConicalSet, SpaceTimePoint};
use crate::io::{load_farfield, load_trace, save_farfield, save_trace, write_json, FarFieldHeader, TraceHeader};
use crate::nearfield::{default_tolerance, pi_minus, pi_plus_bruteforce, time_support_sets};
use crate::noise::{add_relative_noise, NoiseRecord};
use crate::separation::{estimate_thresholds, separate, write_component_mask};
use crate::wavefield::{sample_farfield_matrix, sample_nearfield_trace, FarFieldMatrix};

pub const CLEAN_MATRIX: &str = "farfield_clean.csv";
pub const NOISY_MATRIX: &str = "farfield_noisy.csv";
pub const MESH_FILE: &str = "mesh.csv";
pub const COMPONENTS_FILE: &str = "components.csv";
pub const SEPARATION_FILE: &str = "separation.json";
pub const CONES_FILE: &str = "cones.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const PI_MINUS_FILE: &str = "pi_minus.csv";
pub const PI_PLUS_FILE: &str = "pi_plus.csv";
pub const NEARFIELD_FILE: &str = "nearfield.json";
pub const DIAGNOSE_FILE: &str = "diagnose.json";
pub const SUMMARY_FILE: &str = "summary.json";

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub clean: PathBuf,
    pub noisy: PathBuf,
    pub noise: NoiseRecord,
}

/// Writes the clean and the noisy far-field matrices plus the mesh table.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulateOutput> {
    prepare(out)?;
    let mesh = cfg.mesh.build()?;
    let clean = sample_farfield_matrix(&cfg.sources, &mesh, &cfg.time, cfg.c0)?;
    let (noisy, record) = if cfg.sources.is_empty() {
        // nothing to calibrate against; the zero matrix stays zero
        add_relative_noise(&clean, &crate::noise::NoiseSpec { level: 0.0, ..cfg.noise })?
    } else {
        add_relative_noise(&clean, &cfg.noise)?
    };
    let mut header = FarFieldHeader {
        grid: cfg.time,
        mesh: cfg.mesh,
        c0: cfg.c0,
        sources: cfg.sources.clone(),
        noise: None,
    };
    let clean_path = out.join(CLEAN_MATRIX);
    save_farfield(&clean_path, &clean, &header)?;
    header.noise = Some(record.clone());
    let noisy_path = out.join(NOISY_MATRIX);
    save_farfield(&noisy_path, &noisy, &header)?;
    mesh.write_csv(BufWriter::new(File::create(out.join(MESH_FILE))?))?;
    info!(
        "simulated {}x{} far field, noise delta {:.6e}, ratio {:.9}",
        mesh.len(),
        cfg.time.count,
        record.delta,
        record.achieved_ratio
    );
    Ok(SimulateOutput {
        clean: clean_path,
        noisy: noisy_path,
        noise: record,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub samples: usize,
    pub directions: usize,
    pub t_first: f64,
    pub t_last: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationSummary {
    pub threshold_floor: f64,
    pub threshold_min: f64,
    pub threshold_max: f64,
    pub components: Vec<ComponentSummary>,
}

pub fn cmd_separate(matrix: &Path, cfg: &ExperimentConfig, out: &Path) -> Result<SeparationSummary> {
    prepare(out)?;
    let (g, _) = load_farfield(matrix)?;
    let sep = separate(&g, &cfg.separation)?;
    write_component_mask(BufWriter::new(File::create(out.join(COMPONENTS_FILE))?), &sep.components)?;
    let a = &sep.thresholds.values;
    let summary = SeparationSummary {
        threshold_floor: sep.thresholds.floor,
        threshold_min: a.iter().copied().fold(f64::INFINITY, f64::min),
        threshold_max: a.iter().copied().fold(0.0, f64::max),
        components: sep
            .components
            .iter()
            .map(|c| ComponentSummary {
                samples: c.size(),
                directions: c.chains.len(),
                t_first: g.grid.time(c.first_index()),
                t_last: g.grid.time(c.last_index()),
            })
            .collect(),
    };
    write_json(&out.join(SEPARATION_FILE), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsaReport {
    pub matrix: PathBuf,
    pub c0: f64,
    pub width_rule: WidthRule,
    pub estimates: Vec<ConeEstimate>,
    pub wscc: Vec<bool>,
    pub runtime_seconds: f64,
}

/// Separation plus both cone steps on the matrix at `matrix`.
pub fn cmd_csa(matrix: &Path, cfg: &ExperimentConfig, out: &Path) -> Result<CsaReport> {
    prepare(out)?;
    let (g, header) = load_farfield(matrix)?;
    let report = csa_on_matrix(&g, matrix, header.c0, cfg)?;
    write_json(&out.join(CONES_FILE), &report)?;
    Ok(report)
}

fn csa_on_matrix(g: &FarFieldMatrix, matrix: &Path, c0: f64, cfg: &ExperimentConfig) -> Result<CsaReport> {
    let start = Instant::now();
    let outcome = run_csa(g, &cfg.csa_params(), c0)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    info!("{} component(s) in {runtime_seconds:.3} s", outcome.estimates.len());
    Ok(CsaReport {
        matrix: matrix.to_path_buf(),
        c0,
        width_rule: cfg.csa.width_rule,
        wscc: outcome.wscc(c0),
        estimates: outcome.estimates,
        runtime_seconds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearfieldSummary {
    pub points: usize,
    pub silent_points: Vec<usize>,
    pub nodes: usize,
    pub tol: f64,
    pub pi_minus_marked: usize,
    pub pi_plus_marked: Option<usize>,
    pub agreement: Option<usize>,
    /// Per near-field source, whether the node nearest `(shift, position)` is marked.
    pub source_nodes_marked: Vec<bool>,
}

/// Builds `Pi-` (and with `oracle` the brute-force `Pi+`) from a boundary
/// trace. Without `trace` the trace is simulated from the nearfield sources.
pub fn cmd_nearfield(cfg: &ExperimentConfig, trace: Option<&Path>, oracle: bool, out: &Path) -> Result<NearfieldSummary> {
    let nf = cfg
        .nearfield
        .as_ref()
        .ok_or_else(|| Error::config("nearfield", "section is required for this command"))?;
    prepare(out)?;
    let (trace, header) = match trace {
        Some(p) => load_trace(p)?,
        None => {
            let points = nf.boundary.points();
            let t = sample_nearfield_trace(&nf.sources, &points, &cfg.time, cfg.c0)?;
            let header = TraceHeader {
                grid: cfg.time,
                c0: cfg.c0,
                points,
                sources: nf.sources.clone(),
                noise: None,
            };
            save_trace(&out.join(TRACE_FILE), &t, &header)?;
            (t, header)
        }
    };
    let a = estimate_thresholds(trace.values.view(), cfg.separation.n_lead, cfg.separation.factor)?;
    let sets = time_support_sets(&trace, &a, cfg.separation.max_gap)?;
    let silent = sets.silent_points();
    if !silent.is_empty() {
        warn!("{} measurement point(s) never exceed their threshold; the mask is empty", silent.len());
    }
    let domain = nf.domain()?;
    let tol = nf.tol.unwrap_or_else(|| default_tolerance(&domain.grid));
    let minus = pi_minus(&sets, &trace.points, &domain, header.c0, tol)?;
    minus.write_csv(BufWriter::new(File::create(out.join(PI_MINUS_FILE))?))?;
    let source_nodes_marked = header
        .sources
        .iter()
        .map(|s| minus.flags[domain.nearest(&SpaceTimePoint::new(s.shift, s.position))])
        .collect();
    let mut summary = NearfieldSummary {
        points: trace.points.len(),
        silent_points: silent,
        nodes: domain.len(),
        tol,
        pi_minus_marked: minus.count(),
        pi_plus_marked: None,
        agreement: None,
        source_nodes_marked,
    };
    if oracle {
        let plus = pi_plus_bruteforce(&sets, &trace.points, &domain, header.c0, tol)?;
        plus.write_csv(BufWriter::new(File::create(out.join(PI_PLUS_FILE))?))?;
        summary.pi_plus_marked = Some(plus.count());
        summary.agreement = Some(minus.agreement(&plus));
    }
    write_json(&out.join(NEARFIELD_FILE), &summary)?;
    if let Some(agree) = summary.agreement {
        if agree != summary.nodes {
            return Err(Error::InvariantViolation(format!(
                "Pi+ and Pi- differ on {} of {} nodes",
                summary.nodes - agree,
                summary.nodes
            )));
        }
    }
    Ok(summary)
}

/// Cone whose range conditions are checked by [`cmd_diagnose`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub radius: f64,
    pub center_time: f64,
    pub center_space: Vector3<f64>,
}

impl ConeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return Err(Error::Malformed(format!("cone radius {} is not a finite non-negative number", self.radius)));
        }
        if !self.center_time.is_finite() || !self.center_space.iter().all(|v| v.is_finite()) {
            return Err(Error::Malformed("cone center is not finite".into()));
        }
        Ok(())
    }

    /// Reads the step-two cone of `component` from a CSA report.
    pub fn from_report(path: &Path, component: usize) -> Result<Self> {
        let report: CsaReport = crate::io::read_json(path)?;
        let e = report
            .estimates
            .get(component)
            .ok_or_else(|| Error::Malformed(format!("report has no component {component}")))?;
        Ok(Self {
            radius: e.step2.radius,
            center_time: e.step2.center_time,
            center_space: e.step2.center_space,
        })
    }
}

/// Range conditions for `cone`, optionally against a single component.
pub fn cmd_diagnose(
    matrix: &Path,
    cone: &ConeSpec,
    component: Option<usize>,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<FriedlanderReport> {
    cone.validate()?;
    prepare(out)?;
    let (g, header) = load_farfield(matrix)?;
    let k = ConicalSet::new(cone.radius, cone.center_time, cone.center_space)?;
    let report = friedlander_report(&g, &k, header.c0, &cfg.separation, &cfg.diagnostics, component)?;
    write_json(&out.join(DIAGNOSE_FILE), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub noise: NoiseRecord,
    pub csa: CsaReport,
    pub diagnostics: Vec<FriedlanderReport>,
}

/// Simulate, run the CSA on the noisy matrix, and diagnose every step-two cone.
pub fn cmd_run_all(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    let sim = cmd_simulate(cfg, out)?;
    let (g, header) = load_farfield(&sim.noisy)?;
    let csa = csa_on_matrix(&g, &sim.noisy, header.c0, cfg)?;
    write_json(&out.join(CONES_FILE), &csa)?;
    let diagnostics = csa
        .estimates
        .iter()
        .map(|e| {
            friedlander_report(
                &g,
                &e.step2,
                header.c0,
                &cfg.separation,
                &cfg.diagnostics,
                Some(e.component),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = RunSummary {
        name: cfg.name.clone(),
        noise: sim.noise,
        csa,
        diagnostics,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

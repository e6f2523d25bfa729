//! Conical support search.
//!
//! Step one bounds a component by the cone centered at the spatial origin
//! that covers its whole time envelope. Step two scans a grid of spatial
//! shifts `z'`; for each it evaluates the shifted support functions
//! `T+(z') = max (T+(xhat) + z' . xhat / c0)` and
//! `T-(z') = min (T-(xhat) + z' . xhat / c0)` and keeps the narrowest window.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{intersection_contains, ConicalSet, SpaceTimePoint};
use crate::separation::{directional_support, separate, DirectionalSupport, Separation, SeparationParams};
use crate::sphere::SphereMesh;
use crate::wavefield::FarFieldMatrix;

/// `R = c0 (Tmax - Tmin) / 2` around `tau = (Tmax + Tmin) / 2`, `z = 0`.
pub fn step1_bound(ds: &DirectionalSupport, c0: f64) -> Result<ConicalSet> {
    if ds.is_empty() {
        return Err(Error::EmptySupport);
    }
    let t_min = ds.t_minus.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = ds.t_plus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ConicalSet::centered(c0 * (t_max - t_min) / 2.0, (t_max + t_min) / 2.0)
}

/// Radial layout of the shift grid: radii `j / denominator * R`, `j = 1..=j_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShiftGridSpec {
    pub denominator: usize,
    pub j_max: usize,
}

impl Default for ShiftGridSpec {
    fn default() -> Self {
        Self {
            denominator: 34,
            j_max: 51,
        }
    }
}

impl ShiftGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.denominator == 0 {
            return Err(Error::InvalidParameter("shift grid denominator must be positive".into()));
        }
        Ok(())
    }
}

/// Candidate shifts: the origin, then `j` ascending, then mesh index ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftGrid {
    pub spec: ShiftGridSpec,
    pub radius: f64,
    pub candidates: Vec<Vector3<f64>>,
}

pub fn build_shift_grid(radius: f64, mesh: &SphereMesh, spec: ShiftGridSpec) -> Result<ShiftGrid> {
    spec.validate()?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "shift grid radius must be positive, got {radius}"
        )));
    }
    let mut candidates = Vec::with_capacity(1 + spec.j_max * mesh.len());
    candidates.push(Vector3::zeros());
    for j in 1..=spec.j_max {
        let r = j as f64 / spec.denominator as f64 * radius;
        candidates.extend(mesh.directions().iter().map(|d| d * r));
    }
    Ok(ShiftGrid {
        spec,
        radius,
        candidates,
    })
}

impl ShiftGrid {
    /// Distance between neighbouring candidates at distance `r` from the
    /// origin: the larger of the radial step and the angular mesh step.
    pub fn spacing_at(&self, mesh: &SphereMesh, r: f64) -> f64 {
        (self.radius / self.spec.denominator as f64).max(r * mesh.max_neighbor_angle())
    }
}

/// `(T-(z'), T+(z'))`; directions absent from the support are skipped.
pub fn shifted_interval(ds: &DirectionalSupport, mesh: &SphereMesh, zprime: &Vector3<f64>, c0: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &m) in ds.directions.iter().enumerate() {
        let s = zprime.dot(mesh.direction(m)) / c0;
        lo = lo.min(ds.t_minus[i] + s);
        hi = hi.max(ds.t_plus[i] + s);
    }
    (lo, hi)
}

/// How a candidate's window is compared with the running radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthRule {
    /// Compare and store the full width `T+ - T-`.
    #[default]
    Literal,
    /// Compare and store the cone radius `c0 (T+ - T-) / 2`.
    Strict,
}

impl WidthRule {
    fn radius(self, lo: f64, hi: f64, c0: f64) -> f64 {
        match self {
            WidthRule::Literal => hi - lo,
            WidthRule::Strict => c0 * (hi - lo) / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step2 {
    pub cone: ConicalSet,
    pub improved: bool,
    /// Position of the winning candidate in the grid; `None` if nothing improved.
    pub candidate: Option<usize>,
}

/// Scans the grid in order, replacing `(R*, tau*, z*)` whenever a candidate's
/// radius under `rule` is strictly smaller than the current `R*`.
pub fn step2_refine(
    ds: &DirectionalSupport,
    mesh: &SphereMesh,
    step1: &ConicalSet,
    grid: &ShiftGrid,
    c0: f64,
    rule: WidthRule,
) -> Result<Step2> {
    if ds.is_empty() {
        return Err(Error::EmptySupport);
    }
    let windows: Vec<(f64, f64)> = grid
        .candidates
        .par_iter()
        .map(|z| shifted_interval(ds, mesh, z, c0))
        .collect();
    let mut best = *step1;
    let mut candidate = None;
    for (i, &(lo, hi)) in windows.iter().enumerate() {
        let r = rule.radius(lo, hi, c0);
        if r < best.radius {
            best = ConicalSet::new(r, (hi + lo) / 2.0, grid.candidates[i])?;
            candidate = Some(i);
        }
    }
    Ok(Step2 {
        cone: best,
        improved: candidate.is_some(),
        candidate,
    })
}

/// `tau_{m+1} - tau_m > (R_{m+1} + R_m) / c0` for each consecutive pair.
pub fn check_wscc(cones: &[ConicalSet], c0: f64) -> Vec<bool> {
    cones
        .windows(2)
        .map(|w| w[1].center_time - w[0].center_time > (w[1].radius + w[0].radius) / c0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsaParams {
    pub separation: SeparationParams,
    pub grid: ShiftGridSpec,
    pub width_rule: WidthRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeEstimate {
    pub component: usize,
    pub samples: usize,
    pub directions: usize,
    pub step1: ConicalSet,
    pub step2: ConicalSet,
    pub improved: bool,
    pub grid: ShiftGridSpec,
    pub candidates: usize,
    pub width_rule: WidthRule,
}

impl ConeEstimate {
    /// Membership in the intersection of both cones.
    pub fn contains(&self, p: &SpaceTimePoint, c0: f64) -> bool {
        intersection_contains(&self.step1, &self.step2, p, c0)
    }
}

/// Runs both steps on one component's support envelope.
pub fn estimate_cone(
    ds: &DirectionalSupport,
    mesh: &SphereMesh,
    c0: f64,
    grid_spec: ShiftGridSpec,
    rule: WidthRule,
) -> Result<(ConeEstimate, ShiftGrid)> {
    let step1 = step1_bound(ds, c0)?;
    let grid = if step1.radius > 0.0 {
        build_shift_grid(step1.radius, mesh, grid_spec)?
    } else {
        ShiftGrid {
            spec: grid_spec,
            radius: 0.0,
            candidates: vec![Vector3::zeros()],
        }
    };
    let step2 = step2_refine(ds, mesh, &step1, &grid, c0, rule)?;
    let estimate = ConeEstimate {
        component: 0,
        samples: 0,
        directions: ds.len(),
        step1,
        step2: step2.cone,
        improved: step2.improved,
        grid: grid_spec,
        candidates: grid.candidates.len(),
        width_rule: rule,
    };
    Ok((estimate, grid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsaOutcome {
    pub separation: Separation,
    pub estimates: Vec<ConeEstimate>,
}

impl CsaOutcome {
    pub fn wscc(&self, c0: f64) -> Vec<bool> {
        let cones: Vec<ConicalSet> = self.estimates.iter().map(|e| e.step1).collect();
        check_wscc(&cones, c0)
    }
}

/// Threshold, separate, and bound every component of `g`.
pub fn run_csa(g: &FarFieldMatrix, params: &CsaParams, c0: f64) -> Result<CsaOutcome> {
    params.grid.validate()?;
    let separation = separate(g, &params.separation)?;
    let estimates = separation
        .components
        .iter()
        .enumerate()
        .map(|(id, comp)| {
            let ds = directional_support(comp, &g.grid);
            let (mut e, _) = estimate_cone(&ds, &g.mesh, c0, params.grid, params.width_rule)?;
            e.component = id;
            e.samples = comp.size();
            Ok(e)
        })
        .collect::<Result<_>>()?;
    Ok(CsaOutcome {
        separation,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(m: usize, a: f64, b: f64) -> DirectionalSupport {
        DirectionalSupport::new(vec![m], vec![a], vec![b]).unwrap()
    }

    #[test]
    fn step1_of_an_instant() {
        let k = step1_bound(&single(3, 0.7, 0.7), 1.0).unwrap();
        assert_eq!(k.radius, 0.0);
        assert_eq!(k.center_time, 0.7);
        assert!(step1_bound(&DirectionalSupport::new(vec![], vec![], vec![]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn shift_grid_counts_and_radii() {
        let mesh = SphereMesh::build(2, 3).unwrap();
        let g = build_shift_grid(2.0, &mesh, ShiftGridSpec { denominator: 1, j_max: 1 }).unwrap();
        assert_eq!(g.candidates.len(), 7);
        assert_eq!(g.candidates[0], Vector3::zeros());
        for c in &g.candidates[1..] {
            assert!((c.norm() - 2.0).abs() < 1e-12);
        }
        let mesh = SphereMesh::build(20, 22).unwrap();
        let g = build_shift_grid(1.5, &mesh, ShiftGridSpec::default()).unwrap();
        assert_eq!(g.candidates.len(), 22441);
        for (i, c) in g.candidates.iter().enumerate().skip(1) {
            let j = (i - 1) / 440 + 1;
            if j <= 34 {
                assert!(c.norm() <= 1.5 + 1e-12);
            }
        }
        let outer = g.candidates.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!((outer - 2.25).abs() < 1e-12);
        assert!(build_shift_grid(0.0, &mesh, ShiftGridSpec::default()).is_err());
    }

    #[test]
    fn single_direction_width_is_shift_invariant() {
        let mesh = SphereMesh::build(4, 5).unwrap();
        let ds = single(7, 1.0, 1.5);
        let z = Vector3::new(0.3, -0.2, 0.9);
        let (lo, hi) = shifted_interval(&ds, &mesh, &z, 1.0);
        let s = z.dot(mesh.direction(7));
        assert!((lo - 1.0 - s).abs() < 1e-15 && (hi - 1.5 - s).abs() < 1e-15);
        let step1 = step1_bound(&ds, 1.0).unwrap();
        let grid = build_shift_grid(1.0, &mesh, ShiftGridSpec::default()).unwrap();
        // literal: width 0.5 < R = 0.25 never holds
        let lit = step2_refine(&ds, &mesh, &step1, &grid, 1.0, WidthRule::Literal).unwrap();
        assert!(!lit.improved);
        assert_eq!(lit.cone, step1);
        // strict: every candidate ties with the origin up to rounding
        let strict = step2_refine(&ds, &mesh, &step1, &grid, 1.0, WidthRule::Strict).unwrap();
        assert!((strict.cone.radius - step1.radius).abs() < 1e-12);
    }

    #[test]
    fn first_strict_improvement_wins_ties() {
        // two antipodal directions with equal envelopes: any shift orthogonal
        // to them ties with the origin; shifts along them widen
        let mesh = SphereMesh::build(2, 4).unwrap();
        let ds = DirectionalSupport::new(vec![0, 2], vec![-1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let step1 = step1_bound(&ds, 1.0).unwrap();
        let grid = build_shift_grid(step1.radius, &mesh, ShiftGridSpec::default()).unwrap();
        let r = step2_refine(&ds, &mesh, &step1, &grid, 1.0, WidthRule::Strict).unwrap();
        let z = grid.candidates[r.candidate.unwrap()];
        let first = grid
            .candidates
            .iter()
            .position(|c| {
                let (lo, hi) = shifted_interval(&ds, &mesh, c, 1.0);
                (hi - lo) / 2.0 == r.cone.radius
            })
            .unwrap();
        assert_eq!(grid.candidates[first], z);
    }

    #[test]
    fn wscc_examples() {
        let k = |r: f64, t: f64| ConicalSet::centered(r, t).unwrap();
        assert!(check_wscc(&[k(1.0, 0.0)], 1.0).is_empty());
        assert_eq!(check_wscc(&[k(1.201, -1.3), k(0.790, 2.5)], 1.0), vec![true]);
        assert_eq!(check_wscc(&[k(1.0, 0.0), k(1.0, 1.0)], 1.0), vec![false]);
    }

    #[test]
    fn zero_matrix_gives_no_estimates() {
        let mesh = SphereMesh::build(20, 22).unwrap();
        let g = FarFieldMatrix::zeros(crate::wavefield::TimeGrid::default(), mesh);
        let out = run_csa(&g, &CsaParams::default(), 1.0).unwrap();
        assert!(out.estimates.is_empty());
        assert!(out.wscc(1.0).is_empty());
    }
}

//! Analytic waves and far fields of point-like sources.
//!
//! A source `q(t) delta(x - p)` radiates the retarded potential
//! `v(t, x) = q(t - |x - p| / c0) / (4 pi |x - p|)` and the far field
//! `v_inf(tau, xhat) = q(tau + xhat . p / c0)`, the limit of
//! `4 pi r v(tau + r / c0, r xhat)` as `r -> inf`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::fibonacci_directions;
use crate::sphere::SphereMesh;

/// Uniform grid of `count` instants from `t_min` to `t_max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGrid {
    pub count: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            count: 1000,
            t_min: -10.0,
            t_max: 10.0,
        }
    }
}

impl TimeGrid {
    pub fn new(count: usize, t_min: f64, t_max: f64) -> Result<Self> {
        let g = Self { count, t_min, t_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidParameter("time grid needs at least 2 samples".into()));
        }
        if !(self.t_max > self.t_min) || !self.t_min.is_finite() || !self.t_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time grid must be strictly increasing, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.t_max - self.t_min) / (self.count - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_min + k as f64 * self.step()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.time(k)).collect()
    }

    /// Rebuilds a grid from explicit sample times, checking uniform spacing.
    pub fn from_times(times: &[f64]) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Malformed("need at least two time samples".into()));
        }
        let g = Self::new(times.len(), times[0], *times.last().unwrap())
            .map_err(|e| Error::Malformed(e.to_string()))?;
        let tol = 1e-9 * (1.0 + g.t_min.abs().max(g.t_max.abs()));
        for (k, &t) in times.iter().enumerate() {
            if (t - g.time(k)).abs() > tol {
                return Err(Error::Malformed(format!(
                    "time samples are not uniform at index {k}"
                )));
            }
        }
        Ok(g)
    }
}

fn default_rate() -> f64 {
    8.0
}
fn default_half_width() -> f64 {
    1.0
}
fn default_amplitude() -> f64 {
    1.0
}

/// `amplitude * exp(-rate (t - shift)^2) delta(x - position)`, truncated to
/// `|t - shift| <= half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPointSource {
    pub position: Vector3<f64>,
    pub shift: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

impl GaussianPointSource {
    pub fn new(position: Vector3<f64>, shift: f64) -> Self {
        Self {
            position,
            shift,
            rate: default_rate(),
            half_width: default_half_width(),
            amplitude: default_amplitude(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0) || !(self.half_width > 0.0) {
            return Err(Error::InvalidParameter(
                "Gaussian source needs positive rate and half_width".into(),
            ));
        }
        Ok(())
    }

    /// Time profile as a function of the offset from `shift`.
    pub fn profile(&self, s: f64) -> f64 {
        if s * s <= self.half_width * self.half_width {
            self.amplitude * (-self.rate * s * s).exp()
        } else {
            0.0
        }
    }
}

pub fn eval_farfield_gaussian(src: &GaussianPointSource, tau: f64, xhat: &Vector3<f64>, c0: f64) -> f64 {
    src.profile(tau - src.shift + xhat.dot(&src.position) / c0)
}

/// Retarded potential of a Gaussian point source; rejects `x == position`.
pub fn eval_nearfield_gaussian(src: &GaussianPointSource, t: f64, x: &Vector3<f64>, c0: f64) -> Result<f64> {
    let r = (x - src.position).norm();
    if r == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(src.profile(t - src.shift - r / c0) / (4.0 * PI * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// `center + radius * (cos w t, sin w t, sin w t)` with `w = 2 pi / period`.
    Orbit {
        center: Vector3<f64>,
        radius: f64,
        period: f64,
    },
    Stationary { position: Vector3<f64> },
}

impl Trajectory {
    pub fn position(&self, t: f64) -> Vector3<f64> {
        match *self {
            Trajectory::Orbit {
                center,
                radius,
                period,
            } => {
                let a = 2.0 * PI * t / period;
                center + Vector3::new(a.cos(), a.sin(), a.sin()) * radius
            }
            Trajectory::Stationary { position } => position,
        }
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        match *self {
            Trajectory::Orbit { radius, period, .. } => {
                let w = 2.0 * PI / period;
                let a = w * t;
                Vector3::new(-a.sin(), a.cos(), a.cos()) * (radius * w)
            }
            Trajectory::Stationary { .. } => Vector3::zeros(),
        }
    }
}

fn default_window_end() -> f64 {
    4.0
}
fn default_false() -> bool {
    false
}

/// Moving point source with profile
/// `exp(-rate [v / sin(pi v / L)^(1/4)]^2)`, `v = t - window_start`,
/// `L = window_end - window_start`, active only inside the open window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingPointSource {
    pub trajectory: Trajectory,
    #[serde(default)]
    pub window_start: f64,
    #[serde(default = "default_window_end")]
    pub window_end: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Include the Doppler factor `1 / |1 - xhat . s'(u) / c0|` of the moving
    /// delta; off reproduces the bare profile.
    #[serde(default = "default_false")]
    pub retarded_jacobian: bool,
    /// Offset into the window subtracted in the numerator of the profile,
    /// `exp(-rate [(v - offset) / sin(pi v / L)^(1/4)]^2)`. Zero gives the
    /// displayed formula, whose pulse sits at the start of the window.
    #[serde(default)]
    pub profile_offset: f64,
}

/// Convergence tolerance and iteration cap of the retarded-time fixed point.
pub const RETARDED_TOL: f64 = 1e-12;
pub const RETARDED_MAX_ITER: usize = 200;

impl MovingPointSource {
    /// The circular source used in the moving-source experiment.
    pub fn paper_orbit() -> Self {
        Self {
            trajectory: Trajectory::Orbit {
                center: Vector3::new(2.0, 2.0, 0.0),
                radius: 0.3,
                period: 4.0,
            },
            window_start: 0.0,
            window_end: 4.0,
            rate: 8.0,
            retarded_jacobian: false,
            profile_offset: 0.0,
        }
    }

    pub fn validate(&self, c0: f64) -> Result<()> {
        if !(self.window_end > self.window_start) || !(self.rate > 0.0) {
            return Err(Error::InvalidParameter(
                "moving source needs a non-empty window and positive rate".into(),
            ));
        }
        let speed = self.max_speed();
        if !(speed < c0) {
            return Err(Error::InvalidParameter(format!(
                "trajectory speed {speed} is not below c0 = {c0}"
            )));
        }
        Ok(())
    }

    /// Sampled supremum of `|s'(t)|` over one window length on either side.
    pub fn max_speed(&self) -> f64 {
        let len = self.window_end - self.window_start;
        let n = 4000;
        (0..=n)
            .map(|k| {
                let t = self.window_start - len + 3.0 * len * k as f64 / n as f64;
                self.trajectory.velocity(t).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn profile(&self, u: f64) -> f64 {
        if !(u > self.window_start && u < self.window_end) {
            return 0.0;
        }
        let v = u - self.window_start;
        let s = (PI * v / (self.window_end - self.window_start)).sin();
        if s <= 0.0 {
            return 0.0;
        }
        let arg = (v - self.profile_offset) / s.powf(0.25);
        (-self.rate * arg * arg).exp()
    }

    /// Solves `u = tau + xhat . s(u) / c0` by fixed-point iteration from `u = tau`.
    /// Returns the root and the number of iterations used.
    pub fn retarded_time(&self, tau: f64, xhat: &Vector3<f64>, c0: f64) -> Result<(f64, usize)> {
        let mut u = tau;
        for it in 1..=RETARDED_MAX_ITER {
            let next = tau + xhat.dot(&self.trajectory.position(u)) / c0;
            if (next - u).abs() < RETARDED_TOL {
                return Ok((next, it));
            }
            u = next;
        }
        Err(Error::RetardedTimeDiverged {
            iterations: RETARDED_MAX_ITER,
        })
    }
}

pub fn eval_farfield_moving(src: &MovingPointSource, tau: f64, xhat: &Vector3<f64>, c0: f64) -> Result<f64> {
    let (u, _) = src.retarded_time(tau, xhat, c0)?;
    let value = src.profile(u);
    if src.retarded_jacobian && value != 0.0 {
        let doppler = (1.0 - xhat.dot(&src.trajectory.velocity(u)) / c0).abs();
        Ok(value / doppler)
    } else {
        Ok(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Gaussian(GaussianPointSource),
    Moving(MovingPointSource),
}

impl Source {
    pub fn validate(&self, c0: f64) -> Result<()> {
        match self {
            Source::Gaussian(g) => g.validate(),
            Source::Moving(m) => m.validate(c0),
        }
    }

    pub fn far_field(&self, tau: f64, xhat: &Vector3<f64>, c0: f64) -> Result<f64> {
        match self {
            Source::Gaussian(g) => Ok(eval_farfield_gaussian(g, tau, xhat, c0)),
            Source::Moving(m) => eval_farfield_moving(m, tau, xhat, c0),
        }
    }
}

/// Far field sampled on `grid` (columns) times mesh directions (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldMatrix {
    pub grid: TimeGrid,
    pub mesh: SphereMesh,
    pub values: Array2<f64>,
}

impl FarFieldMatrix {
    pub fn new(grid: TimeGrid, mesh: SphereMesh, values: Array2<f64>) -> Result<Self> {
        grid.validate()?;
        if values.dim() != (mesh.len(), grid.count) {
            return Err(Error::InvalidParameter(format!(
                "far-field values have shape {:?}, expected ({}, {})",
                values.dim(),
                mesh.len(),
                grid.count
            )));
        }
        Ok(Self { grid, mesh, values })
    }

    pub fn zeros(grid: TimeGrid, mesh: SphereMesh) -> Self {
        let values = Array2::zeros((mesh.len(), grid.count));
        Self { grid, mesh, values }
    }

    pub fn n_directions(&self) -> usize {
        self.mesh.len()
    }

    pub fn row(&self, m: usize) -> ArrayView1<'_, f64> {
        self.values.row(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Superposed analytic far fields of `sources`, sampled on `mesh` x `grid`.
pub fn sample_farfield_matrix(sources: &[Source], mesh: &SphereMesh, grid: &TimeGrid, c0: f64) -> Result<FarFieldMatrix> {
    grid.validate()?;
    for s in sources {
        s.validate(c0)?;
    }
    let times = grid.times();
    let rows: Vec<Vec<f64>> = mesh
        .directions()
        .par_iter()
        .map(|xhat| {
            times
                .iter()
                .map(|&tau| {
                    sources
                        .iter()
                        .try_fold(0.0, |acc, s| Ok::<_, Error>(acc + s.far_field(tau, xhat, c0)?))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let values = Array2::from_shape_vec((mesh.len(), grid.count), flat)
        .expect("row lengths match the grid");
    FarFieldMatrix::new(*grid, mesh.clone(), values)
}

/// Linear interpolation of a uniformly sampled row; zero outside the grid.
pub(crate) fn interpolate(row: ArrayView1<'_, f64>, grid: &TimeGrid, t: f64) -> f64 {
    let x = (t - grid.t_min) / grid.step();
    if !(x >= 0.0) || x > (grid.count - 1) as f64 {
        return 0.0;
    }
    let k = (x.floor() as usize).min(grid.count - 2);
    let f = x - k as f64;
    row[k] * (1.0 - f) + row[k + 1] * f
}

/// `(tau, xhat) -> g(tau + tau0 - xhat . z0 / c0, xhat)` on the same grid.
pub fn shift_farfield(g: &FarFieldMatrix, tau0: f64, z0: &Vector3<f64>, c0: f64) -> FarFieldMatrix {
    let mut out = FarFieldMatrix::zeros(g.grid, g.mesh.clone());
    for (m, xhat) in g.mesh.directions().iter().enumerate() {
        let offset = tau0 - xhat.dot(z0) / c0;
        let row = g.values.row(m);
        for k in 0..g.grid.count {
            out.values[[m, k]] = interpolate(row, &g.grid, g.grid.time(k) + offset);
        }
    }
    out
}

/// Wave trace sampled on `grid` (columns) times measurement points (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldTrace {
    pub grid: TimeGrid,
    pub points: Vec<Vector3<f64>>,
    pub values: Array2<f64>,
}

impl NearFieldTrace {
    pub fn new(grid: TimeGrid, points: Vec<Vector3<f64>>, values: Array2<f64>) -> Result<Self> {
        grid.validate()?;
        if values.dim() != (points.len(), grid.count) {
            return Err(Error::InvalidParameter(format!(
                "trace values have shape {:?}, expected ({}, {})",
                values.dim(),
                points.len(),
                grid.count
            )));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidParameter(format!(
                        "boundary points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self { grid, points, values })
    }
}

pub fn sample_nearfield_trace(
    sources: &[GaussianPointSource],
    points: &[Vector3<f64>],
    grid: &TimeGrid,
    c0: f64,
) -> Result<NearFieldTrace> {
    for s in sources {
        s.validate()?;
    }
    let mut values = Array2::zeros((points.len(), grid.count));
    for (i, y) in points.iter().enumerate() {
        for k in 0..grid.count {
            let t = grid.time(k);
            let mut v = 0.0;
            for s in sources {
                v += eval_nearfield_gaussian(s, t, y, c0)?;
            }
            values[[i, k]] = v;
        }
    }
    NearFieldTrace::new(*grid, points.to_vec(), values)
}

/// `count` near-uniform points on the sphere `|x - center| = radius`.
pub fn sphere_points(center: &Vector3<f64>, radius: f64, count: usize) -> Vec<Vector3<f64>> {
    fibonacci_directions(count)
        .into_iter()
        .map(|d| center + d * radius)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1() -> GaussianPointSource {
        GaussianPointSource::new(Vector3::new(1.2, 0.0, 0.0), -1.3)
    }

    #[test]
    fn gaussian_far_field_peak_edge_and_cutoff() {
        let src = f1();
        for xhat in [Vector3::x(), Vector3::y(), Vector3::new(0.6, 0.0, -0.8)] {
            let tau = -1.3 - xhat.dot(&src.position);
            assert!((eval_farfield_gaussian(&src, tau, &xhat, 1.0) - 1.0).abs() < 1e-15);
            let edge = eval_farfield_gaussian(&src, tau + 1.0, &xhat, 1.0);
            assert!((edge - (-8f64).exp()).abs() < 1e-12);
            assert!((edge - 3.3546e-4).abs() < 1e-8);
            assert_eq!(eval_farfield_gaussian(&src, tau + 1.5, &xhat, 1.0), 0.0);
        }
    }

    #[test]
    fn near_field_causality_and_peak() {
        let src = GaussianPointSource::new(Vector3::new(0.5, -0.5, 0.0), 1.0);
        let x = src.position + Vector3::new(0.0, 2.0, 0.0);
        assert_eq!(eval_nearfield_gaussian(&src, 1.0 + 2.0 - 1.01, &x, 1.0).unwrap(), 0.0);
        let peak = eval_nearfield_gaussian(&src, 3.0, &x, 1.0).unwrap();
        assert!((peak - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!(matches!(
            eval_nearfield_gaussian(&src, 0.0, &src.position, 1.0),
            Err(Error::SingularEvaluation)
        ));
    }

    #[test]
    fn moving_source_outside_window_is_zero() {
        let src = MovingPointSource::paper_orbit();
        let xhat = Vector3::x();
        // tau far before the window: u <= 0
        assert_eq!(eval_farfield_moving(&src, -6.0, &xhat, 1.0).unwrap(), 0.0);
        assert_eq!(eval_farfield_moving(&src, 8.0, &xhat, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn moving_source_window_midpoint() {
        let src = MovingPointSource::paper_orbit();
        let xhat = Vector3::new(0.0, 0.6, 0.8);
        let u = 2.0;
        let tau = u - xhat.dot(&src.trajectory.position(u));
        let (root, _) = src.retarded_time(tau, &xhat, 1.0).unwrap();
        assert!((root - u).abs() < 1e-11);
        let v = eval_farfield_moving(&src, tau, &xhat, 1.0).unwrap();
        assert!((v / (-32f64).exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stationary_moving_source_reduces_to_point_source() {
        let z0 = Vector3::new(0.3, -0.7, 1.1);
        let mov = MovingPointSource {
            trajectory: Trajectory::Stationary { position: z0 },
            ..MovingPointSource::paper_orbit()
        };
        for (tau, xhat) in [(0.5, Vector3::x()), (1.7, Vector3::new(0.0, -0.6, 0.8)), (-0.2, Vector3::z())] {
            let (u, iters) = mov.retarded_time(tau, &xhat, 1.0).unwrap();
            assert!(iters <= 2);
            assert!((u - (tau + xhat.dot(&z0))).abs() < 1e-15);
            let v = eval_farfield_moving(&mov, tau, &xhat, 1.0).unwrap();
            assert!((v - mov.profile(tau + xhat.dot(&z0))).abs() < 1e-12);
        }
    }

    #[test]
    fn superluminal_trajectory_is_rejected() {
        let fast = MovingPointSource {
            trajectory: Trajectory::Orbit {
                center: Vector3::zeros(),
                radius: 3.0,
                period: 4.0,
            },
            ..MovingPointSource::paper_orbit()
        };
        assert!(fast.validate(1.0).is_err());
        assert!(MovingPointSource::paper_orbit().validate(1.0).is_ok());
    }

    #[test]
    fn paper_orbit_fixed_point_iteration_counts() {
        let src = MovingPointSource::paper_orbit();
        let mesh = SphereMesh::build(20, 22).unwrap();
        let grid = TimeGrid::default();
        let mut worst = 0;
        for xhat in mesh.directions() {
            for k in (0..grid.count).step_by(7) {
                let (_, it) = src.retarded_time(grid.time(k), xhat, 1.0).unwrap();
                worst = worst.max(it);
            }
        }
        // a-priori bound for a contraction q starting |u1 - u0| <= max |s| away
        let q = src.max_speed();
        assert!((q - 0.3 * PI / 2.0 * 2f64.sqrt()).abs() < 1e-6);
        let start = 0.3 + 8f64.sqrt();
        let bound = 2 + ((RETARDED_TOL / start).ln() / q.ln()).ceil() as usize;
        assert!(worst <= bound, "worst iteration count {worst}, bound {bound}");
    }

    #[test]
    fn jacobian_option_scales_by_doppler_factor() {
        let mut src = MovingPointSource::paper_orbit();
        let xhat = Vector3::x();
        let tau = 0.3 - xhat.dot(&src.trajectory.position(0.3));
        let bare = eval_farfield_moving(&src, tau, &xhat, 1.0).unwrap();
        src.retarded_jacobian = true;
        let full = eval_farfield_moving(&src, tau, &xhat, 1.0).unwrap();
        let (u, _) = src.retarded_time(tau, &xhat, 1.0).unwrap();
        let doppler = 1.0 - xhat.dot(&src.trajectory.velocity(u));
        assert!((full * doppler.abs() - bare).abs() < 1e-14);
    }

    #[test]
    fn empty_source_list_gives_zero_matrix() {
        let mesh = SphereMesh::build(4, 6).unwrap();
        let grid = TimeGrid::new(50, -2.0, 2.0).unwrap();
        let g = sample_farfield_matrix(&[], &mesh, &grid, 1.0).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn time_mirrored_source_gives_column_reversed_matrix() {
        let mesh = SphereMesh::build(6, 8).unwrap();
        let grid = TimeGrid::new(201, -4.0, 4.0).unwrap();
        let src = GaussianPointSource::new(Vector3::new(0.4, -0.3, 0.2), 0.7);
        let mirrored = GaussianPointSource::new(-src.position, -src.shift);
        let a = sample_farfield_matrix(&[Source::Gaussian(src)], &mesh, &grid, 1.0).unwrap();
        let b = sample_farfield_matrix(&[Source::Gaussian(mirrored)], &mesh, &grid, 1.0).unwrap();
        for m in 0..mesh.len() {
            for k in 0..grid.count {
                let (x, y) = (a.values[[m, k]], b.values[[m, grid.count - 1 - k]]);
                assert!((x - y).abs() < 1e-12, "m={m} k={k}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn superposition_is_exact() {
        let mesh = SphereMesh::build(5, 7).unwrap();
        let grid = TimeGrid::new(120, -5.0, 5.0).unwrap();
        let s1 = Source::Gaussian(f1());
        let s2 = Source::Gaussian(GaussianPointSource::new(Vector3::new(-0.4, 0.4, -0.4), 2.5));
        let both = sample_farfield_matrix(&[s1, s2], &mesh, &grid, 1.0).unwrap();
        let a = sample_farfield_matrix(&[s1], &mesh, &grid, 1.0).unwrap();
        let b = sample_farfield_matrix(&[s2], &mesh, &grid, 1.0).unwrap();
        assert_eq!(both.values, &a.values + &b.values);
    }

    #[test]
    fn zero_shift_is_identity() {
        let mesh = SphereMesh::build(4, 6).unwrap();
        let grid = TimeGrid::new(300, -5.0, 5.0).unwrap();
        let g = sample_farfield_matrix(&[Source::Gaussian(f1())], &mesh, &grid, 1.0).unwrap();
        let s = shift_farfield(&g, 0.0, &Vector3::zeros(), 1.0);
        for (a, b) in g.values.iter().zip(s.values.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shifting_by_source_point_centers_support() {
        let mesh = SphereMesh::build(20, 22).unwrap();
        let grid = TimeGrid::default();
        let src = f1();
        let g = sample_farfield_matrix(&[Source::Gaussian(src)], &mesh, &grid, 1.0).unwrap();
        let s = shift_farfield(&g, src.shift, &src.position, 1.0);
        let h = grid.step();
        for m in 0..mesh.len() {
            let row = s.values.row(m);
            let on: Vec<f64> = (0..grid.count).filter(|&k| row[k] != 0.0).map(|k| grid.time(k)).collect();
            let (lo, hi) = (on[0], *on.last().unwrap());
            assert!(lo >= -1.0 - h && lo <= -1.0 + h, "m={m} lo={lo}");
            assert!(hi <= 1.0 + h && hi >= 1.0 - h, "m={m} hi={hi}");
        }
    }

    #[test]
    fn uniform_grid_round_trip_from_times() {
        let g = TimeGrid::default();
        assert_eq!(TimeGrid::from_times(&g.times()).unwrap(), g);
        assert!(TimeGrid::from_times(&[0.0, 1.0, 3.0]).is_err());
        assert!(TimeGrid::new(1, 0.0, 1.0).is_err());
        assert!(TimeGrid::new(10, 1.0, 1.0).is_err());
    }
}

//! Numerical checks of the two range conditions a far field of a source in a
//! cone of radius `R` must satisfy once shifted to the cone's apex: support in
//! `|tau| < R`, and `l`-th time moments that are polynomials of degree at most
//! `l` in the direction.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConicalSet;
use crate::harmonics;
use crate::separation::{directional_support, separate, SeparationParams};
use crate::sphere::SphereMesh;
use crate::wavefield::{shift_farfield, FarFieldMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentField {
    pub ell: usize,
    pub values: Vec<f64>,
    /// `int |g| |tau|^l dtau`, the scale against which `values` is judged.
    pub magnitude: Vec<f64>,
}

impl MomentField {
    /// A field with the given values serving as their own scale.
    pub fn from_values(ell: usize, values: Vec<f64>) -> Self {
        let magnitude = values.iter().map(|v| v.abs()).collect();
        Self { ell, values, magnitude }
    }
}

/// `mu_l[m] = int g(tau, xhat_m) tau^l dtau` by the trapezoid rule.
pub fn moment(g: &FarFieldMatrix, ell: usize) -> MomentField {
    let h = g.grid.step();
    let n = g.grid.count;
    let w: Vec<f64> = (0..n)
        .map(|k| {
            let end = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            end * h * g.grid.time(k).powi(ell as i32)
        })
        .collect();
    let values = g.values.rows().into_iter().map(|row| row.iter().zip(&w).map(|(v, w)| v * w).sum()).collect();
    let magnitude = g
        .values
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&w).map(|(v, w)| (v * w).abs()).sum())
        .collect();
    MomentField {
        ell,
        values,
        magnitude,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeTest {
    pub degree: usize,
    pub residual: f64,
    pub passed: bool,
}

/// Fits harmonics up to `degree` and passes iff the residual energy relative
/// to the energy of the absolute moment is below `rel_tol`. Measuring against
/// the absolute moment keeps moments that vanish by symmetry (odd moments of
/// an even pulse) from turning rounding noise into a failure.
pub fn polynomial_degree_test(
    mu: &MomentField,
    mesh: &SphereMesh,
    weights: &[f64],
    degree: usize,
    rel_tol: f64,
) -> Result<DegreeTest> {
    if mu.values.len() != mesh.len() {
        return Err(Error::InvalidParameter(format!(
            "moment field has {} values for {} directions",
            mu.values.len(),
            mesh.len()
        )));
    }
    let fit = harmonics::fit(mesh.directions(), weights, &mu.values, degree)?;
    let energy = |v: &[f64]| v.iter().zip(weights).map(|(x, w)| w * x * x).sum::<f64>();
    let (signal, scale) = (energy(&mu.values), energy(&mu.magnitude));
    let residual = if scale == 0.0 {
        0.0
    } else {
        fit.residual * signal / scale
    };
    Ok(DegreeTest {
        degree,
        residual,
        passed: residual < rel_tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsParams {
    pub ell_max: usize,
    pub rel_tol: f64,
}

impl Default for DiagnosticsParams {
    fn default() -> Self {
        Self {
            ell_max: 4,
            rel_tol: 1e-3,
        }
    }
}

/// Relative tolerance suited to data with a few percent of noise.
pub const NOISY_REL_TOL: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCondition {
    pub passed: bool,
    /// Largest `|tau|` of the shifted support, `None` if the support is empty.
    pub extent: Option<f64>,
    /// `R - extent`; negative when the support sticks out of the cone.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedlanderReport {
    pub radius: f64,
    pub center_time: f64,
    pub center_space: Vector3<f64>,
    pub support: SupportCondition,
    pub moments: Vec<DegreeTest>,
    pub passed: bool,
}

/// Checks both conditions for `cone`.
///
/// The support of `g` is taken from the components found by `separation`
/// (only component `component` if given),
/// and moments are computed from `g` restricted to those components so that
/// noise outside the support does not swamp them. Condition one allows one
/// time step of slack for grid quantization.
pub fn friedlander_report(
    g: &FarFieldMatrix,
    cone: &ConicalSet,
    c0: f64,
    separation: &SeparationParams,
    params: &DiagnosticsParams,
    component: Option<usize>,
) -> Result<FriedlanderReport> {
    let (r, tau_c, z_c) = (cone.radius, cone.center_time, &cone.center_space);
    let sep = separate(g, separation)?;
    let selected: Vec<_> = match component {
        None => sep.components.iter().collect(),
        Some(i) => vec![sep
            .components
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("no component {i}")))?],
    };
    let mut restricted = FarFieldMatrix::zeros(g.grid, g.mesh.clone());
    let mut extent: Option<f64> = None;
    for comp in selected {
        for (&m, chains) in &comp.chains {
            for c in chains {
                for k in c.first()..=c.last() {
                    restricted.values[[m, k]] = g.values[[m, k]];
                }
            }
        }
        let ds = directional_support(comp, &g.grid);
        for (i, &m) in ds.directions.iter().enumerate() {
            let s = g.mesh.direction(m).dot(z_c) / c0 - tau_c;
            let e = (ds.t_minus[i] + s).abs().max((ds.t_plus[i] + s).abs());
            extent = Some(extent.map_or(e, |x| x.max(e)));
        }
    }
    let support = SupportCondition {
        passed: extent.is_none_or(|e| e < r + g.grid.step()),
        extent,
        margin: extent.map(|e| r - e),
    };

    let shifted = shift_farfield(&restricted, tau_c, z_c, c0);
    let weights = g.mesh.quadrature_weights();
    let moments = (0..=params.ell_max)
        .map(|ell| polynomial_degree_test(&moment(&shifted, ell), &g.mesh, &weights, ell, params.rel_tol))
        .collect::<Result<Vec<_>>>()?;
    let passed = support.passed && moments.iter().all(|t| t.passed);
    Ok(FriedlanderReport {
        radius: r,
        center_time: tau_c,
        center_space: *z_c,
        support,
        moments,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{sample_farfield_matrix, GaussianPointSource, Source, TimeGrid};

    fn point_source() -> (GaussianPointSource, FarFieldMatrix) {
        let src = GaussianPointSource::new(Vector3::new(0.6, -0.3, 0.2), 0.4);
        let mesh = SphereMesh::build(20, 22).unwrap();
        let g = sample_farfield_matrix(&[Source::Gaussian(src)], &mesh, &TimeGrid::default(), 1.0).unwrap();
        (src, g)
    }

    #[test]
    fn zero_field_has_zero_moments_and_passes() {
        let mesh = SphereMesh::build(20, 22).unwrap();
        let g = FarFieldMatrix::zeros(TimeGrid::default(), mesh);
        assert!(moment(&g, 3).values.iter().all(|&v| v == 0.0));
        let cone = ConicalSet::centered(0.5, 0.0).unwrap();
        let rep = friedlander_report(&g, &cone, 1.0, &SeparationParams::default(), &DiagnosticsParams::default(), None)
            .unwrap();
        assert!(rep.passed);
        assert_eq!(rep.support.extent, None);
    }

    #[test]
    fn constant_field_has_degree_zero() {
        let mesh = SphereMesh::build(20, 22).unwrap();
        let w = mesh.quadrature_weights();
        let mu = MomentField::from_values(0, vec![2.5; mesh.len()]);
        let t = polynomial_degree_test(&mu, &mesh, &w, 0, 1e-3).unwrap();
        assert!(t.passed && t.residual < 1e-20);
    }

    #[test]
    fn report_passes_at_the_source_and_fails_at_origin() {
        let (src, g) = point_source();
        let sep = SeparationParams::default();
        let params = DiagnosticsParams::default();
        let cone = ConicalSet::new(1.0, src.shift, src.position).unwrap();
        let at_source = friedlander_report(&g, &cone, 1.0, &sep, &params, None).unwrap();
        assert!(at_source.support.passed, "{:?}", at_source.support);
        assert!(at_source.passed, "{:?}", at_source.moments);
        let cone = ConicalSet::centered(0.5, src.shift).unwrap();
        let at_origin = friedlander_report(&g, &cone, 1.0, &sep, &params, Some(0)).unwrap();
        assert!(friedlander_report(&g, &cone, 1.0, &sep, &params, Some(1)).is_err());
        assert!(!at_origin.support.passed);
    }
}

//! Space-time primitives on `R x R^3`: light cones, bi-conical sets, convex
//! hulls of sampled compact sets, and a sampled test for the characteristic
//! hull built from sectors spanned by flipped characteristic directions.

use nalgebra::{Vector3, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub x: Vector3<f64>,
}

impl SpaceTimePoint {
    pub fn new(t: f64, x: Vector3<f64>) -> Self {
        Self { t, x }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    pub fn to_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.t, self.x[0], self.x[1], self.x[2])
    }

    fn to_array(self) -> [f64; 4] {
        [self.t, self.x[0], self.x[1], self.x[2]]
    }
}

/// Time at which the forward light cone of `apex` meets the world line of the
/// fixed spatial point `y`.
pub fn forward_cone_crossing_time(apex: &SpaceTimePoint, y: &Vector3<f64>, c0: f64) -> f64 {
    apex.t + (apex.x - y).norm() / c0
}

/// The bi-cone `{ (t, x) : |t - center_time| + |x - center_space| / c0 <= radius }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicalSet {
    pub radius: f64,
    pub center_time: f64,
    pub center_space: Vector3<f64>,
}

impl ConicalSet {
    pub fn new(radius: f64, center_time: f64, center_space: Vector3<f64>) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cone radius must be finite and non-negative, got {radius}"
            )));
        }
        if !center_time.is_finite() || !center_space.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("cone center must be finite".into()));
        }
        Ok(Self {
            radius,
            center_time,
            center_space,
        })
    }

    /// Cone centered on the spatial origin.
    pub fn centered(radius: f64, center_time: f64) -> Result<Self> {
        Self::new(radius, center_time, Vector3::zeros())
    }

    /// Left-hand side of the membership inequality; the point is inside iff
    /// this does not exceed `radius`.
    pub fn gauge(&self, p: &SpaceTimePoint, c0: f64) -> f64 {
        (p.t - self.center_time).abs() + (p.x - self.center_space).norm() / c0
    }

    pub fn contains(&self, p: &SpaceTimePoint, c0: f64) -> bool {
        self.gauge(p, c0) <= self.radius
    }

    pub fn apex(&self) -> SpaceTimePoint {
        SpaceTimePoint::new(self.center_time, self.center_space)
    }
}

pub fn conical_set_contains(k: &ConicalSet, p: &SpaceTimePoint, c0: f64) -> bool {
    k.contains(p, c0)
}

pub fn intersection_contains(k1: &ConicalSet, k2: &ConicalSet, p: &SpaceTimePoint, c0: f64) -> bool {
    k1.contains(p, c0) && k2.contains(p, c0)
}

/// Unit vector of `R^4` along which `c0^2 xi_t^2 = |xi_x|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicDirection {
    pub t: f64,
    pub x: Vector3<f64>,
}

impl CharacteristicDirection {
    pub fn new(t: f64, x: Vector3<f64>, c0: f64) -> Result<Self> {
        let norm = (t * t + x.norm_squared()).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "characteristic direction must be a unit vector, |xi| = {norm}"
            )));
        }
        if (c0 * c0 * t * t - x.norm_squared()).abs() > 1e-10 {
            return Err(Error::InvalidParameter(
                "direction is not characteristic: c0^2 xi_t^2 != |xi_x|^2".into(),
            ));
        }
        Ok(Self { t, x })
    }

    /// The characteristic direction with time sign `time_sign` whose spatial
    /// part points along the unit vector `omega`.
    pub fn from_spatial(omega: &Vector3<f64>, time_sign: f64, c0: f64) -> Self {
        let a = 1.0 / (1.0 + c0 * c0).sqrt();
        let omega = omega.normalize();
        Self {
            t: time_sign.signum() * a,
            x: omega * (c0 * a),
        }
    }

    pub fn to_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.t, self.x[0], self.x[1], self.x[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlipKind {
    /// Opposite spatial parts, equal time parts: the sector opens around the time axis.
    Spatial,
    /// Opposite time parts, equal spatial parts: the sector opens around a spatial direction.
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlippedPair {
    pub first: CharacteristicDirection,
    pub second: CharacteristicDirection,
    pub kind: FlipKind,
}

impl FlippedPair {
    pub fn new(first: CharacteristicDirection, second: CharacteristicDirection) -> Result<Self> {
        let tol = 1e-12;
        let kind = if (first.t + second.t).abs() <= tol {
            FlipKind::Temporal
        } else if (first.x + second.x).norm() <= tol {
            FlipKind::Spatial
        } else {
            return Err(Error::InvalidParameter(
                "directions are not flipped: neither time nor space parts are opposite".into(),
            ));
        };
        Ok(Self { first, second, kind })
    }

    fn sector_frame(&self) -> SectorFrame {
        let e1 = self.first.to_vector4();
        let xi2 = self.second.to_vector4();
        let cos = e1.dot(&xi2).clamp(-1.0, 1.0);
        let e2 = (xi2 - e1 * cos).normalize();
        let angle = (xi2.dot(&e2)).atan2(cos);
        SectorFrame { e1, e2, angle }
    }
}

/// Orthonormal frame of the 2-plane spanned by a flipped pair; the geodesic
/// between the pair sweeps polar angles `[0, angle]` in this frame.
struct SectorFrame {
    e1: Vector4<f64>,
    e2: Vector4<f64>,
    angle: f64,
}

impl SectorFrame {
    fn geodesic_point(&self, s: f64) -> Vector4<f64> {
        let a = s * self.angle;
        self.e1 * a.cos() + self.e2 * a.sin()
    }

    /// Euclidean distance from `q` to the closed sector with apex `apex`.
    fn exact_distance(&self, apex: &Vector4<f64>, q: &Vector4<f64>) -> f64 {
        let d = q - apex;
        let u = d.dot(&self.e1);
        let v = d.dot(&self.e2);
        let off_plane_sq = (d.norm_squared() - u * u - v * v).max(0.0);
        let phi = v.atan2(u);
        let in_plane_sq = if (0.0..=self.angle).contains(&phi) {
            0.0
        } else {
            let ray_dist_sq = |w: (f64, f64)| {
                let along = (u * w.0 + v * w.1).max(0.0);
                let (ru, rv) = (u - along * w.0, v - along * w.1);
                ru * ru + rv * rv
            };
            ray_dist_sq((1.0, 0.0)).min(ray_dist_sq((self.angle.cos(), self.angle.sin())))
        };
        (off_plane_sq + in_plane_sq).sqrt()
    }
}

/// A compact subset of space-time represented by finitely many samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud4D {
    points: Vec<SpaceTimePoint>,
}

impl PointCloud4D {
    pub fn new(points: Vec<SpaceTimePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("point cloud must be non-empty".into()));
        }
        if !points.iter().all(SpaceTimePoint::is_finite) {
            return Err(Error::InvalidParameter("point cloud has non-finite entries".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[SpaceTimePoint] {
        &self.points
    }

    pub fn diameter(&self) -> f64 {
        let v: Vec<Vector4<f64>> = self.points.iter().map(|p| p.to_vector4()).collect();
        let mut d: f64 = 0.0;
        for (i, a) in v.iter().enumerate() {
            for b in &v[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn default_hull_tolerance(&self) -> f64 {
        1e-9 * (1.0 + self.diameter())
    }
}

/// Whether `p` lies within (L1) distance `tol` of the convex hull of the cloud,
/// decided by a linear program over convex-combination weights.
pub fn convex_hull_contains(cloud: &PointCloud4D, p: &SpaceTimePoint, tol: f64) -> bool {
    let pts: Vec<[f64; 4]> = cloud.points.iter().map(|q| q.to_array()).collect();
    lp::l1_distance_to_hull(&pts, p.to_array()) <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SectorTest {
    /// Closed-form point-to-sector distance.
    Exact,
    /// Distance to `geodesic_samples` rays, each sampled at the apex plus
    /// `ray_samples` logarithmically spaced lengths.
    Sampled {
        geodesic_samples: usize,
        ray_samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharHullSampling {
    pub flipped_pairs: usize,
    /// Neighborhood widths as fractions of the diameter of the cloud joined with the query point.
    pub epsilon_fractions: Vec<f64>,
    /// Sampled rays extend to this multiple of the same diameter.
    pub ray_length_factor: f64,
    pub sector_test: SectorTest,
}

impl Default for CharHullSampling {
    fn default() -> Self {
        Self {
            flipped_pairs: 512,
            epsilon_fractions: vec![1.0 / 100.0, 1.0 / 20.0],
            ray_length_factor: 10.0,
            sector_test: SectorTest::Exact,
        }
    }
}

impl CharHullSampling {
    pub fn validate(&self) -> Result<()> {
        if self.flipped_pairs == 0 {
            return Err(Error::InvalidParameter("flipped_pairs must be positive".into()));
        }
        if self.epsilon_fractions.is_empty()
            || self.epsilon_fractions.iter().any(|e| !(*e > 0.0) || !e.is_finite())
        {
            return Err(Error::InvalidParameter(
                "epsilon_fractions must be a non-empty list of positive values".into(),
            ));
        }
        if !(self.ray_length_factor > 0.0) {
            return Err(Error::InvalidParameter("ray_length_factor must be positive".into()));
        }
        if let SectorTest::Sampled {
            geodesic_samples,
            ray_samples,
        } = self.sector_test
        {
            if geodesic_samples < 2 || ray_samples == 0 {
                return Err(Error::InvalidParameter(
                    "sampled sectors need at least 2 geodesic samples and 1 ray sample".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Certificate that `p` lies outside the characteristic hull: the open
/// `epsilon`-neighborhood of the sector spanned by `pair` at `p` misses the cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub pair: FlippedPair,
    pub epsilon: f64,
    /// Smallest distance from a cloud sample to the sector.
    pub clearance: f64,
}

/// Near-uniform unit vectors on the sphere (golden-angle spiral).
pub fn fibonacci_directions(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Flipped pairs cycling through both flip kinds (and both time orientations
/// of the spatial flip) over near-uniform spatial directions.
pub fn enumerate_flipped_pairs(count: usize, c0: f64) -> Vec<FlippedPair> {
    let dirs = fibonacci_directions(count.div_ceil(3));
    (0..count)
        .map(|i| {
            let omega = &dirs[i / 3];
            let (first, second, kind) = match i % 3 {
                0 | 1 => {
                    let sign = if i % 3 == 0 { 1.0 } else { -1.0 };
                    (
                        CharacteristicDirection::from_spatial(omega, sign, c0),
                        CharacteristicDirection::from_spatial(&-omega, sign, c0),
                        FlipKind::Spatial,
                    )
                }
                _ => (
                    CharacteristicDirection::from_spatial(omega, 1.0, c0),
                    CharacteristicDirection::from_spatial(omega, -1.0, c0),
                    FlipKind::Temporal,
                ),
            };
            FlippedPair { first, second, kind }
        })
        .collect()
}

fn sampled_sector_points(
    frame: &SectorFrame,
    apex: &Vector4<f64>,
    geodesic_samples: usize,
    ray_samples: usize,
    length: f64,
) -> Vec<Vector4<f64>> {
    let mut lengths = Vec::with_capacity(ray_samples);
    let shortest = length * 1e-3;
    for k in 0..ray_samples {
        let f = if ray_samples == 1 {
            1.0
        } else {
            k as f64 / (ray_samples - 1) as f64
        };
        lengths.push(shortest * (length / shortest).powf(f));
    }
    let mut pts = vec![*apex];
    for g in 0..geodesic_samples {
        let dir = frame.geodesic_point(g as f64 / (geodesic_samples - 1) as f64);
        pts.extend(lengths.iter().map(|&a| apex + dir * a));
    }
    pts
}

/// Searches the sampled flipped pairs for a sector at `p` whose
/// epsilon-neighborhood avoids every sample of the cloud. A returned witness
/// proves `p` is outside the characteristic hull; `None` is inconclusive.
pub fn char_hull_excludes(
    cloud: &PointCloud4D,
    p: &SpaceTimePoint,
    sampling: &CharHullSampling,
    c0: f64,
) -> Result<Option<Witness>> {
    sampling.validate()?;
    let apex = p.to_vector4();
    let samples: Vec<Vector4<f64>> = cloud.points.iter().map(|q| q.to_vector4()).collect();
    let mut scale = cloud.diameter();
    for q in &samples {
        scale = scale.max((q - apex).norm());
    }
    if scale == 0.0 {
        return Ok(None);
    }
    let mut eps: Vec<f64> = sampling.epsilon_fractions.iter().map(|f| f * scale).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    let smallest = *eps.last().expect("validated non-empty");

    let pairs = enumerate_flipped_pairs(sampling.flipped_pairs, c0);
    let witness = pairs.par_iter().find_map_first(|pair| {
        let frame = pair.sector_frame();
        let clearance = match sampling.sector_test {
            SectorTest::Exact => samples
                .iter()
                .map(|q| frame.exact_distance(&apex, q))
                .fold(f64::INFINITY, f64::min),
            SectorTest::Sampled {
                geodesic_samples,
                ray_samples,
            } => {
                let pts = sampled_sector_points(
                    &frame,
                    &apex,
                    geodesic_samples,
                    ray_samples,
                    sampling.ray_length_factor * scale,
                );
                samples
                    .iter()
                    .flat_map(|q| pts.iter().map(move |s| (q - s).norm()))
                    .fold(f64::INFINITY, f64::min)
            }
        };
        if clearance >= smallest {
            let epsilon = eps.iter().copied().find(|&e| clearance >= e)?;
            Some(Witness {
                pair: *pair,
                epsilon,
                clearance,
            })
        } else {
            None
        }
    });
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, x: f64, y: f64, z: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(t, Vector3::new(x, y, z))
    }

    #[test]
    fn forward_cone_crossing_examples() {
        assert_eq!(forward_cone_crossing_time(&pt(0.0, 0.0, 0.0, 0.0), &Vector3::zeros(), 1.0), 0.0);
        assert_eq!(
            forward_cone_crossing_time(&pt(1.0, 0.0, 0.0, 0.0), &Vector3::new(3.0, 0.0, 0.0), 1.0),
            4.0
        );
        let t = forward_cone_crossing_time(&pt(-1.3, 1.2, 0.0, 0.0), &Vector3::new(2.0, 0.0, 0.0), 1.0);
        assert!((t - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn conical_set_membership_examples() {
        let k = ConicalSet::new(0.0, 2.5, Vector3::new(-0.4, 0.4, -0.4)).unwrap();
        assert!(k.contains(&pt(2.5, -0.4, 0.4, -0.4), 1.0));
        let k = ConicalSet::centered(1.0, 0.0).unwrap();
        assert!(!k.contains(&pt(0.5, 0.6, 0.0, 0.0), 1.0));
        // the published step-one cone misses the true source point by 0.008
        let k = ConicalSet::centered(1.201, -1.291).unwrap();
        let p1 = pt(-1.3, 1.2, 0.0, 0.0);
        assert!((k.gauge(&p1, 1.0) - 1.209).abs() < 1e-12);
        assert!(!k.contains(&p1, 1.0));
        assert!(ConicalSet::centered(1.209 + 1e-12, -1.291).unwrap().contains(&p1, 1.0));
        assert!(ConicalSet::centered(-1.0, 0.0).is_err());
    }

    #[test]
    fn intersection_examples() {
        let k1 = ConicalSet::centered(1.0, 0.0).unwrap();
        let k2 = ConicalSet::centered(1.0, 0.5).unwrap();
        assert!(intersection_contains(&k1, &k2, &pt(0.75, 0.0, 0.0, 0.0), 1.0));
        let p = pt(0.3, 0.2, 0.1, 0.0);
        assert_eq!(intersection_contains(&k1, &k1, &p, 1.0), k1.contains(&p, 1.0));
        let far = ConicalSet::centered(1.0, 5.0).unwrap();
        for t in [-2.0, 0.0, 1.0, 2.5, 5.0] {
            assert!(!intersection_contains(&k1, &far, &pt(t, 0.0, 0.0, 0.0), 1.0));
        }
    }

    #[test]
    fn characteristic_direction_invariants() {
        let xi = CharacteristicDirection::from_spatial(&Vector3::new(0.0, 3.0, 4.0), -1.0, 2.0);
        assert!(CharacteristicDirection::new(xi.t, xi.x, 2.0).is_ok());
        assert!(CharacteristicDirection::new(1.0, Vector3::zeros(), 1.0).is_err());
        assert!(CharacteristicDirection::new(0.6, Vector3::new(0.8, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn flipped_pair_kinds() {
        let w = Vector3::new(1.0, 0.0, 0.0);
        let a = CharacteristicDirection::from_spatial(&w, 1.0, 1.0);
        let b = CharacteristicDirection::from_spatial(&-w, 1.0, 1.0);
        let c = CharacteristicDirection::from_spatial(&w, -1.0, 1.0);
        assert_eq!(FlippedPair::new(a, b).unwrap().kind, FlipKind::Spatial);
        assert_eq!(FlippedPair::new(a, c).unwrap().kind, FlipKind::Temporal);
        let d = CharacteristicDirection::from_spatial(&Vector3::new(0.0, 1.0, 0.0), 1.0, 1.0);
        assert!(FlippedPair::new(a, d).is_err());
        for pair in enumerate_flipped_pairs(30, 1.5) {
            assert!(FlippedPair::new(pair.first, pair.second).is_ok());
        }
    }

    #[test]
    fn exact_sector_distance_matches_dense_sampling() {
        let pair = enumerate_flipped_pairs(7, 1.0)[5];
        let frame = pair.sector_frame();
        let apex = Vector4::new(0.1, -0.2, 0.3, 0.0);
        let pts = sampled_sector_points(&frame, &apex, 400, 400, 20.0);
        for q in [
            Vector4::new(1.0, 2.0, -1.0, 0.5),
            Vector4::new(-3.0, 0.0, 0.0, 1.0),
            Vector4::new(0.5, 0.5, 0.5, 0.5),
        ] {
            let exact = frame.exact_distance(&apex, &q);
            let sampled = pts.iter().map(|s| (q - s).norm()).fold(f64::INFINITY, f64::min);
            assert!(exact <= sampled + 1e-12);
            assert!(sampled - exact < 0.05, "exact {exact} sampled {sampled}");
        }
    }

    #[test]
    fn hull_of_point_segment_and_tetrahedron() {
        let q = pt(0.3, 1.0, -2.0, 0.5);
        let cloud = PointCloud4D::new(vec![q]).unwrap();
        assert!(convex_hull_contains(&cloud, &q, cloud.default_hull_tolerance()));

        let seg = PointCloud4D::new(vec![pt(0.0, 0.0, 0.0, 0.0), pt(2.0, 0.0, 0.0, 0.0)]).unwrap();
        assert!(convex_hull_contains(&seg, &pt(1.0, 0.0, 0.0, 0.0), 1e-9));
        assert!(!convex_hull_contains(&seg, &pt(2.5, 0.0, 0.0, 0.0), 1e-9));

        let tet = PointCloud4D::new(vec![
            pt(0.0, 0.0, 0.0, 0.0),
            pt(0.0, 1.0, 0.0, 0.0),
            pt(0.0, 0.0, 1.0, 0.0),
            pt(0.0, 0.0, 0.0, 1.0),
        ])
        .unwrap();
        assert!(convex_hull_contains(&tet, &pt(0.0, 0.25, 0.25, 0.25), 1e-9));
        assert!(!convex_hull_contains(&tet, &pt(0.01, 0.25, 0.25, 0.25), 1e-9));
    }

    #[test]
    fn single_point_cloud_gets_excluded_elsewhere() {
        let cloud = PointCloud4D::new(vec![pt(0.0, 0.0, 0.0, 0.0)]).unwrap();
        let w = char_hull_excludes(&cloud, &pt(0.4, 0.1, -0.3, 0.2), &CharHullSampling::default(), 1.0)
            .unwrap();
        assert!(w.is_some());
        let none = char_hull_excludes(&cloud, &pt(0.0, 0.0, 0.0, 0.0), &CharHullSampling::default(), 1.0)
            .unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn invalid_sampling_is_rejected() {
        let cloud = PointCloud4D::new(vec![pt(0.0, 0.0, 0.0, 0.0)]).unwrap();
        let p = pt(1.0, 0.0, 0.0, 0.0);
        let s = CharHullSampling {
            flipped_pairs: 0,
            ..Default::default()
        };
        assert!(char_hull_excludes(&cloud, &p, &s, 1.0).is_err());
        let s = CharHullSampling {
            epsilon_fractions: vec![0.0],
            ..Default::default()
        };
        assert!(char_hull_excludes(&cloud, &p, &s, 1.0).is_err());
        let s = CharHullSampling {
            sector_test: SectorTest::Sampled {
                geodesic_samples: 0,
                ray_samples: 4,
            },
            ..Default::default()
        };
        assert!(char_hull_excludes(&cloud, &p, &s, 1.0).is_err());
        assert!(PointCloud4D::new(vec![]).is_err());
    }

    #[test]
    fn sampled_sector_mode_never_excludes_cloud_points() {
        let cloud = PointCloud4D::new(vec![
            pt(0.0, 0.0, 0.0, 0.0),
            pt(1.0, 0.5, 0.0, 0.0),
            pt(-0.5, 0.0, 1.0, 0.3),
        ])
        .unwrap();
        let s = CharHullSampling {
            sector_test: SectorTest::Sampled {
                geodesic_samples: 33,
                ray_samples: 16,
            },
            ..Default::default()
        };
        for q in cloud.points() {
            assert!(char_hull_excludes(&cloud, q, &s, 1.0).unwrap().is_none());
        }
        let far = pt(10.0, 10.0, 0.0, 0.0);
        assert!(char_hull_excludes(&cloud, &far, &s, 1.0).unwrap().is_some());
    }
}

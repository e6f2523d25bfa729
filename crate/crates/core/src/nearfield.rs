//! Support bounds from boundary traces.
//!
//! For each measurement point `y` the time support `I(g, y)` of the trace is
//! estimated by thresholding. A space-time node `(t, x)` belongs to `Pi-` if
//! `t + |x - y| / c0` falls in `I(g, y)` for every `y`, and to `Pi+` if the
//! forward light cone of `(t, x)` meets every sensor's world line inside its
//! support. Both sets coincide; [`pi_plus_bruteforce`] recomputes the second
//! independently as a cross-check.

use std::io::Write;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{forward_cone_crossing_time, SpaceTimePoint};
use crate::separation::{receiver_chains, ThresholdVector};
use crate::wavefield::{NearFieldTrace, TimeGrid};

/// Sorted, disjoint support intervals per measurement point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSupportSets {
    pub intervals: Vec<Vec<(f64, f64)>>,
}

impl TimeSupportSets {
    pub fn new(intervals: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        for (i, iv) in intervals.iter().enumerate() {
            for w in iv.windows(2) {
                if !(w[0].1 < w[1].0) {
                    return Err(Error::InvalidParameter(format!(
                        "support intervals of point {i} overlap or are unsorted"
                    )));
                }
            }
            if iv.iter().any(|&(a, b)| !(a <= b)) {
                return Err(Error::InvalidParameter(format!("empty interval at point {i}")));
            }
        }
        Ok(Self { intervals })
    }

    /// Indices of points whose support is empty.
    pub fn silent_points(&self) -> Vec<usize> {
        (0..self.intervals.len()).filter(|&i| self.intervals[i].is_empty()).collect()
    }

    fn hits(&self, i: usize, s: f64, tol: f64) -> bool {
        self.intervals[i].iter().any(|&(a, b)| a - tol <= s && s <= b + tol)
    }
}

pub fn time_support_sets(trace: &NearFieldTrace, a: &ThresholdVector, max_gap: f64) -> Result<TimeSupportSets> {
    if a.values.len() != trace.points.len() {
        return Err(Error::InvalidParameter(format!(
            "{} thresholds for {} measurement points",
            a.values.len(),
            trace.points.len()
        )));
    }
    let intervals = (0..trace.points.len())
        .map(|i| {
            receiver_chains(trace.values.row(i), &trace.grid, a.values[i], max_gap)
                .iter()
                .map(|c| (trace.grid.time(c.first()), trace.grid.time(c.last())))
                .collect()
        })
        .collect();
    TimeSupportSets::new(intervals)
}

/// Candidate nodes: every grid time paired with every lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskDomain {
    pub grid: TimeGrid,
    pub lattice: Vec<Vector3<f64>>,
}

impl MaskDomain {
    pub fn new(grid: TimeGrid, lattice: Vec<Vector3<f64>>) -> Result<Self> {
        grid.validate()?;
        if lattice.is_empty() {
            return Err(Error::InvalidParameter("mask lattice is empty".into()));
        }
        Ok(Self { grid, lattice })
    }

    /// `n^3` points on a cube of half edge `half_extent` around `center`.
    pub fn cube_lattice(center: &Vector3<f64>, half_extent: f64, n: usize) -> Vec<Vector3<f64>> {
        let coord = |i: usize| {
            if n == 1 {
                0.0
            } else {
                -half_extent + 2.0 * half_extent * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(center + Vector3::new(coord(i), coord(j), coord(k)));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.grid.count * self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, index: usize) -> SpaceTimePoint {
        let n = self.lattice.len();
        SpaceTimePoint::new(self.grid.time(index / n), self.lattice[index % n])
    }

    /// Index of the node closest to `p` in time, then in space.
    pub fn nearest(&self, p: &SpaceTimePoint) -> usize {
        let k = ((p.t - self.grid.t_min) / self.grid.step())
            .round()
            .clamp(0.0, (self.grid.count - 1) as f64) as usize;
        let i = (0..self.lattice.len())
            .min_by(|&a, &b| {
                (self.lattice[a] - p.x)
                    .norm()
                    .total_cmp(&(self.lattice[b] - p.x).norm())
            })
            .expect("non-empty lattice");
        k * self.lattice.len() + i
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportMask4D {
    pub domain: MaskDomain,
    pub flags: Vec<bool>,
}

impl SupportMask4D {
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn agreement(&self, other: &SupportMask4D) -> usize {
        self.flags.iter().zip(&other.flags).filter(|(a, b)| a == b).count()
    }

    /// One record per node: `t,x1,x2,x3,flag` with flag `0` or `1`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x1", "x2", "x3", "flag"])?;
        for (idx, &f) in self.flags.iter().enumerate() {
            let p = self.domain.node(idx);
            w.write_record([
                p.t.to_string(),
                p.x[0].to_string(),
                p.x[1].to_string(),
                p.x[2].to_string(),
                u8::from(f).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_inputs(sets: &TimeSupportSets, points: &[Vector3<f64>], tol: f64) -> Result<()> {
    if sets.intervals.len() != points.len() {
        return Err(Error::InvalidParameter(format!(
            "{} support sets for {} measurement points",
            sets.intervals.len(),
            points.len()
        )));
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("no measurement points".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter("tolerance must be non-negative".into()));
    }
    Ok(())
}

/// Default tolerance: 0.6 of the time step.
pub fn default_tolerance(grid: &TimeGrid) -> f64 {
    0.6 * grid.step()
}

/// Intersection over `y` of the backward-cone shells `t + |x - y| / c0 in I(g, y)`.
pub fn pi_minus(
    sets: &TimeSupportSets,
    points: &[Vector3<f64>],
    domain: &MaskDomain,
    c0: f64,
    tol: f64,
) -> Result<SupportMask4D> {
    check_inputs(sets, points, tol)?;
    let mut flags = vec![sets.silent_points().is_empty(); domain.len()];
    let n = domain.lattice.len();
    for (i, y) in points.iter().enumerate() {
        let delay: Vec<f64> = domain.lattice.iter().map(|x| (x - y).norm() / c0).collect();
        flags.par_iter_mut().enumerate().for_each(|(idx, f)| {
            if *f {
                let s = domain.grid.time(idx / n) + delay[idx % n];
                *f = sets.hits(i, s, tol);
            }
        });
    }
    Ok(SupportMask4D {
        domain: domain.clone(),
        flags,
    })
}

/// Node-by-node test that the forward cone of `(t, x)` meets every sensor
/// inside its support.
pub fn pi_plus_bruteforce(
    sets: &TimeSupportSets,
    points: &[Vector3<f64>],
    domain: &MaskDomain,
    c0: f64,
    tol: f64,
) -> Result<SupportMask4D> {
    check_inputs(sets, points, tol)?;
    let flags = (0..domain.len())
        .into_par_iter()
        .map(|idx| {
            let apex = domain.node(idx);
            points
                .iter()
                .enumerate()
                .all(|(i, y)| sets.hits(i, forward_cone_crossing_time(&apex, y, c0), tol))
        })
        .collect();
    Ok(SupportMask4D {
        domain: domain.clone(),
        flags,
    })
}

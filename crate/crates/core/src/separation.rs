//! Thresholding of noisy receiver time series and grouping of the surviving
//! samples into connected space-time components.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::SphereMesh;
use crate::union_find::DisjointSet;
use crate::wavefield::{FarFieldMatrix, TimeGrid};

/// Per-row noise thresholds with the floor that keeps them positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVector {
    pub values: Vec<f64>,
    pub floor: f64,
}

impl ThresholdVector {
    pub fn uniform(len: usize, value: f64) -> Self {
        Self {
            values: vec![value; len],
            floor: value,
        }
    }
}

/// `A[m] = max(factor * max_{k < n_lead} |values[m][k]|, floor)` with
/// `floor = 1e-9 (1 + max |values|)`.
pub fn estimate_thresholds(values: ArrayView2<'_, f64>, n_lead: usize, factor: f64) -> Result<ThresholdVector> {
    let (_, cols) = values.dim();
    if n_lead == 0 || n_lead > cols {
        return Err(Error::InvalidParameter(format!(
            "n_lead must lie in 1..={cols}, got {n_lead}"
        )));
    }
    if !(factor > 0.0) {
        return Err(Error::InvalidParameter("threshold factor must be positive".into()));
    }
    let peak = values.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let floor = 1e-9 * (1.0 + peak);
    let values = values
        .rows()
        .into_iter()
        .map(|row| {
            let lead = row.iter().take(n_lead).fold(0.0, |a: f64, v| a.max(v.abs()));
            (factor * lead).max(floor)
        })
        .collect();
    Ok(ThresholdVector { values, floor })
}

/// Maximal run of above-threshold samples on one row; `hits` are time indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub hits: Vec<usize>,
}

impl Chain {
    pub fn first(&self) -> usize {
        self.hits[0]
    }

    pub fn last(&self) -> usize {
        *self.hits.last().expect("chains are non-empty")
    }

    pub fn overlaps(&self, other: &Chain) -> bool {
        self.first() <= other.last() && other.first() <= self.last()
    }
}

/// Splits the samples with `|value| > a` into chains whose consecutive members
/// are less than `max_gap` apart in time.
pub fn receiver_chains(row: ArrayView1<'_, f64>, grid: &TimeGrid, a: f64, max_gap: f64) -> Vec<Chain> {
    let step = grid.step();
    let mut chains: Vec<Chain> = Vec::new();
    let mut prev: Option<usize> = None;
    for (k, v) in row.iter().enumerate() {
        if v.abs() <= a {
            continue;
        }
        match prev {
            Some(p) if ((k - p) as f64) * step < max_gap => {
                chains.last_mut().expect("open chain").hits.push(k)
            }
            _ => chains.push(Chain { hits: vec![k] }),
        }
        prev = Some(k);
    }
    chains
}

/// The chains of one row as `[first time, last time]` intervals.
pub fn per_receiver_intervals(row: ArrayView1<'_, f64>, grid: &TimeGrid, a: f64, max_gap: f64) -> Vec<(f64, f64)> {
    receiver_chains(row, grid, a, max_gap)
        .iter()
        .map(|c| (grid.time(c.first()), grid.time(c.last())))
        .collect()
}

/// A connected set of above-threshold samples, stored as its chains per
/// direction index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportComponent {
    pub chains: BTreeMap<usize, Vec<Chain>>,
}

impl SupportComponent {
    pub fn size(&self) -> usize {
        self.chains.values().flatten().map(|c| c.hits.len()).sum()
    }

    /// `(direction, time index)` pairs in lexicographic order.
    pub fn members(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .chains
            .iter()
            .flat_map(|(&m, cs)| cs.iter().flat_map(move |c| c.hits.iter().map(move |&k| (m, k))))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn first_index(&self) -> usize {
        self.chains.values().flatten().map(Chain::first).min().expect("non-empty")
    }

    pub fn last_index(&self) -> usize {
        self.chains.values().flatten().map(Chain::last).max().expect("non-empty")
    }

    pub fn intervals(&self, grid: &TimeGrid) -> BTreeMap<usize, Vec<(f64, f64)>> {
        self.chains
            .iter()
            .map(|(&m, cs)| {
                (m, cs.iter().map(|c| (grid.time(c.first()), grid.time(c.last()))).collect())
            })
            .collect()
    }
}

/// Merges chains on mesh-adjacent directions whose time-index ranges overlap.
/// Components with fewer than `min_size` samples are dropped; the rest are
/// sorted by earliest time index.
pub fn connect_components(chains: &[Vec<Chain>], mesh: &SphereMesh, min_size: usize) -> Vec<SupportComponent> {
    assert_eq!(chains.len(), mesh.len(), "one chain list per mesh direction");
    let mut offset = Vec::with_capacity(chains.len() + 1);
    offset.push(0);
    for cs in chains {
        offset.push(offset.last().unwrap() + cs.len());
    }
    let mut dsu = DisjointSet::new(*offset.last().unwrap());
    for (m, cs) in chains.iter().enumerate() {
        for &n in mesh.neighbors(m) {
            if n <= m {
                continue;
            }
            for (a, ca) in cs.iter().enumerate() {
                for (b, cb) in chains[n].iter().enumerate() {
                    if ca.overlaps(cb) {
                        dsu.union(offset[m] + a, offset[n] + b);
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, SupportComponent> = BTreeMap::new();
    for (m, cs) in chains.iter().enumerate() {
        for (a, c) in cs.iter().enumerate() {
            groups
                .entry(dsu.find(offset[m] + a))
                .or_insert_with(|| SupportComponent {
                    chains: BTreeMap::new(),
                })
                .chains
                .entry(m)
                .or_default()
                .push(c.clone());
        }
    }
    let mut comps: Vec<SupportComponent> = groups.into_values().filter(|c| c.size() >= min_size).collect();
    for comp in &mut comps {
        for cs in comp.chains.values_mut() {
            cs.sort_by_key(Chain::first);
        }
    }
    comps.sort_by_key(|c| (c.first_index(), c.members()[0]));
    comps
}

/// Support envelope `[T-(xhat), T+(xhat)]` of a component on the directions it touches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSupport {
    pub directions: Vec<usize>,
    pub t_minus: Vec<f64>,
    pub t_plus: Vec<f64>,
}

impl DirectionalSupport {
    pub fn new(directions: Vec<usize>, t_minus: Vec<f64>, t_plus: Vec<f64>) -> Result<Self> {
        if directions.len() != t_minus.len() || directions.len() != t_plus.len() {
            return Err(Error::InvalidParameter("support arrays differ in length".into()));
        }
        if t_minus.iter().zip(&t_plus).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidParameter("T- must not exceed T+".into()));
        }
        Ok(Self {
            directions,
            t_minus,
            t_plus,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn get(&self, m: usize) -> Option<(f64, f64)> {
        self.directions
            .binary_search(&m)
            .ok()
            .map(|i| (self.t_minus[i], self.t_plus[i]))
    }
}

pub fn directional_support(comp: &SupportComponent, grid: &TimeGrid) -> DirectionalSupport {
    let mut directions = Vec::with_capacity(comp.chains.len());
    let mut t_minus = Vec::with_capacity(comp.chains.len());
    let mut t_plus = Vec::with_capacity(comp.chains.len());
    for (&m, cs) in &comp.chains {
        let lo = cs.iter().map(Chain::first).min().expect("non-empty");
        let hi = cs.iter().map(Chain::last).max().expect("non-empty");
        directions.push(m);
        t_minus.push(grid.time(lo));
        t_plus.push(grid.time(hi));
    }
    DirectionalSupport {
        directions,
        t_minus,
        t_plus,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeparationParams {
    pub n_lead: usize,
    pub factor: f64,
    pub max_gap: f64,
    pub min_component: usize,
}

impl Default for SeparationParams {
    fn default() -> Self {
        Self {
            n_lead: 20,
            factor: 1.2,
            max_gap: 0.08,
            min_component: 100,
        }
    }
}

impl SeparationParams {
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if self.n_lead == 0 || self.n_lead > grid.count {
            return Err(Error::InvalidParameter(format!(
                "n_lead must lie in 1..={}, got {}",
                grid.count, self.n_lead
            )));
        }
        if !(self.factor > 0.0) {
            return Err(Error::InvalidParameter("factor must be positive".into()));
        }
        if !(self.max_gap >= grid.step()) {
            return Err(Error::InvalidParameter(format!(
                "max_gap {} is below the time step {}",
                self.max_gap,
                grid.step()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub thresholds: ThresholdVector,
    pub components: Vec<SupportComponent>,
}

/// Thresholds, chains and components of a far-field matrix.
pub fn separate(g: &FarFieldMatrix, params: &SeparationParams) -> Result<Separation> {
    params.validate(&g.grid)?;
    let thresholds = estimate_thresholds(g.values.view(), params.n_lead, params.factor)?;
    let chains: Vec<Vec<Chain>> = (0..g.n_directions())
        .into_par_iter()
        .map(|m| receiver_chains(g.row(m), &g.grid, thresholds.values[m], params.max_gap))
        .collect();
    let components = connect_components(&chains, &g.mesh, params.min_component);
    Ok(Separation {
        thresholds,
        components,
    })
}

/// One record per member sample: `component,direction,time_index`.
pub fn write_component_mask<W: Write>(out: W, comps: &[SupportComponent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["component", "direction", "time_index"])?;
    for (c, comp) in comps.iter().enumerate() {
        for (m, k) in comp.members() {
            w.write_record([c.to_string(), m.to_string(), k.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

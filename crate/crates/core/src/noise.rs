//! Seeded uniform noise calibrated in the spectral norm.

use ndarray::{Array1, Array2, ArrayView2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavefield::FarFieldMatrix;

/// Name of the generator recorded next to every noisy matrix.
pub const GENERATOR: &str = "ChaCha20 (rand_chacha, seed_from_u64), row-major draws";

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_level() -> f64 {
    0.05
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            level: default_level(),
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.level >= 0.0) || !self.level.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise level must be finite and non-negative, got {}",
                self.level
            )));
        }
        Ok(())
    }
}

/// What was added to a matrix, for the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub level: f64,
    pub seed: u64,
    pub generator: String,
    pub delta: f64,
    pub achieved_ratio: f64,
}

/// Largest singular value by power iteration on `M^T M`.
pub fn spectral_norm(m: ArrayView2<'_, f64>) -> Result<f64> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("spectral norm of an empty matrix".into()));
    }
    let mut v = Array1::from_elem(cols, 1.0 / (cols as f64).sqrt());
    let mut mv = m.dot(&v);
    if mv.iter().all(|&x| x == 0.0) {
        // all-ones start is orthogonal to the row space; restart on the
        // heaviest column
        let best = (0..cols)
            .map(|j| (j, m.column(j).dot(&m.column(j))))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if best.1 == 0.0 {
            return Ok(0.0);
        }
        v.fill(0.0);
        v[best.0] = 1.0;
        mv = m.dot(&v);
    }
    let mut sigma = norm(&mv);
    for _ in 0..POWER_MAX_ITER {
        let w = m.t().dot(&mv);
        let wn = norm(&w);
        if wn == 0.0 {
            return Ok(sigma);
        }
        v = w / wn;
        mv = m.dot(&v);
        let next = norm(&mv);
        if (next - sigma).abs() <= POWER_TOL * next {
            return Ok(next);
        }
        sigma = next;
    }
    Err(Error::PowerIterationDiverged {
        iterations: POWER_MAX_ITER,
    })
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Matrix of i.i.d. uniform `[-1, 1]` entries drawn row by row.
pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-1.0, 1.0).expect("finite bounds");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(&mut rng))
}

/// Returns `G + delta E` with `delta = level |G|_2 / |E|_2`.
pub fn add_relative_noise(g: &FarFieldMatrix, spec: &NoiseSpec) -> Result<(FarFieldMatrix, NoiseRecord)> {
    spec.validate()?;
    if spec.level == 0.0 {
        let record = NoiseRecord {
            level: 0.0,
            seed: spec.seed,
            generator: GENERATOR.into(),
            delta: 0.0,
            achieved_ratio: 0.0,
        };
        return Ok((g.clone(), record));
    }
    let g_norm = spectral_norm(g.values.view())?;
    if g_norm == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let (rows, cols) = g.values.dim();
    let e = uniform_matrix(rows, cols, spec.seed);
    let delta = spec.level * g_norm / spectral_norm(e.view())?;
    let values = &g.values + &(&e * delta);
    let added = &values - &g.values;
    let achieved_ratio = spectral_norm(added.view())? / g_norm;
    let record = NoiseRecord {
        level: spec.level,
        seed: spec.seed,
        generator: GENERATOR.into(),
        delta,
        achieved_ratio,
    };
    Ok((FarFieldMatrix::new(g.grid, g.mesh.clone(), values)?, record))
}

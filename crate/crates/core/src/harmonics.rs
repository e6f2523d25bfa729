//! Real orthonormal spherical harmonics and weighted least-squares fits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};

/// Number of real harmonics of degree at most `degree`.
pub fn basis_len(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Values of all real harmonics up to `degree` at `xhat`, ordered by degree
/// `l` and then order `m = -l..=l`.
pub fn real_harmonics(degree: usize, xhat: &Vector3<f64>) -> Vec<f64> {
    let z = xhat[2].clamp(-1.0, 1.0);
    let s = (1.0 - z * z).max(0.0).sqrt();
    let phi = xhat[1].atan2(xhat[0]);

    // fully normalized associated Legendre functions p[l][m], scaled so that
    // Y_l0 = p[l][0] and Y_l(+-m) = sqrt(2) p[l][m] cos/sin(m phi)
    let mut p = vec![vec![0.0; degree + 1]; degree + 1];
    p[0][0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=degree {
        let mf = m as f64;
        p[m][m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..degree {
        p[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * z * p[m][m];
    }
    for l in 2..=degree {
        let (done, rest) = p.split_at_mut(l);
        let (p2, p1) = (&done[l - 2], &done[l - 1]);
        for (m, out) in rest[0].iter_mut().enumerate().take(l - 1) {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            *out = a * (z * p1[m] - b * p2[m]);
        }
    }

    let mut out = Vec::with_capacity(basis_len(degree));
    for (l, row) in p.iter().enumerate() {
        for m in (1..=l).rev() {
            out.push(2f64.sqrt() * row[m] * (m as f64 * phi).sin());
        }
        out.push(row[0]);
        for (m, v) in row.iter().enumerate().take(l + 1).skip(1) {
            out.push(2f64.sqrt() * v * (m as f64 * phi).cos());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicFit {
    pub coefficients: Vec<f64>,
    /// Weighted residual energy over weighted total energy.
    pub residual: f64,
}

/// Relative singular-value cutoff below which the design counts as rank-deficient.
const RANK_TOL: f64 = 1e-9;

/// Weighted least-squares fit of `values` by harmonics up to `degree`.
pub fn fit(directions: &[Vector3<f64>], weights: &[f64], values: &[f64], degree: usize) -> Result<HarmonicFit> {
    let n = directions.len();
    if weights.len() != n || values.len() != n {
        return Err(Error::InvalidParameter("fit inputs differ in length".into()));
    }
    let k = basis_len(degree);
    if n < k {
        return Err(Error::RankDeficient { degree });
    }
    let sw: Vec<f64> = weights.iter().map(|w| w.max(0.0).sqrt()).collect();
    let mut a = DMatrix::zeros(n, k);
    for (i, d) in directions.iter().enumerate() {
        for (j, y) in real_harmonics(degree, d).into_iter().enumerate() {
            a[(i, j)] = sw[i] * y;
        }
    }
    let b = DVector::from_iterator(n, values.iter().zip(&sw).map(|(v, s)| v * s));
    let total = b.norm_squared();
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficient { degree });
    }
    let c = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let residual = if total == 0.0 {
        0.0
    } else {
        (&b - &a * &c).norm_squared() / total
    };
    Ok(HarmonicFit {
        coefficients: c.iter().copied().collect(),
        residual,
    })
}

//! Latitude-longitude quadrangle mesh of the unit sphere.
//!
//! Cell `(i, j)` covers polar angles `[i, i + 1] * pi / n_lat` and azimuths
//! `[j - 1/2, j + 1/2] * 2 pi / n_lon`; its receiver direction is the image of
//! the cell's `(theta, phi)` midpoint. Cells are indexed `m = i * n_lon + j`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SphereMesh {
    n_lat: usize,
    n_lon: usize,
    directions: Vec<Vector3<f64>>,
    adjacency: Vec<Vec<usize>>,
}

/// Grid counts of a mesh; enough to rebuild it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    pub n_lat: usize,
    pub n_lon: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { n_lat: 20, n_lon: 22 }
    }
}

impl MeshSpec {
    pub fn build(&self) -> Result<SphereMesh> {
        SphereMesh::build(self.n_lat, self.n_lon)
    }
}

impl SphereMesh {
    pub fn build(n_lat: usize, n_lon: usize) -> Result<Self> {
        if n_lat < 2 || n_lon < 3 {
            return Err(Error::InvalidParameter(format!(
                "sphere mesh needs n_lat >= 2 and n_lon >= 3, got {n_lat} x {n_lon}"
            )));
        }
        let d_theta = PI / n_lat as f64;
        let d_phi = 2.0 * PI / n_lon as f64;
        let mut directions = Vec::with_capacity(n_lat * n_lon);
        let mut adjacency = Vec::with_capacity(n_lat * n_lon);
        for i in 0..n_lat {
            let theta = (i as f64 + 0.5) * d_theta;
            for j in 0..n_lon {
                let phi = j as f64 * d_phi;
                directions.push(Vector3::new(
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                ));
                let mut nb = Vec::with_capacity(4);
                if i > 0 {
                    nb.push((i - 1) * n_lon + j);
                }
                if i + 1 < n_lat {
                    nb.push((i + 1) * n_lon + j);
                }
                nb.push(i * n_lon + (j + n_lon - 1) % n_lon);
                nb.push(i * n_lon + (j + 1) % n_lon);
                adjacency.push(nb);
            }
        }
        Ok(Self {
            n_lat,
            n_lon,
            directions,
            adjacency,
        })
    }

    pub fn spec(&self) -> MeshSpec {
        MeshSpec {
            n_lat: self.n_lat,
            n_lon: self.n_lon,
        }
    }

    pub fn n_lat(&self) -> usize {
        self.n_lat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vector3<f64>] {
        &self.directions
    }

    pub fn direction(&self, m: usize) -> &Vector3<f64> {
        &self.directions[m]
    }

    pub fn neighbors(&self, m: usize) -> &[usize] {
        &self.adjacency[m]
    }

    /// Solid angle of each cell; the weights partition `4 pi`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let d_theta = PI / self.n_lat as f64;
        let d_phi = 2.0 * PI / self.n_lon as f64;
        let band: Vec<f64> = (0..self.n_lat)
            .map(|i| d_phi * ((i as f64 * d_theta).cos() - ((i + 1) as f64 * d_theta).cos()))
            .collect();
        (0..self.len()).map(|m| band[m / self.n_lon]).collect()
    }

    /// Largest angle between mesh-adjacent directions.
    pub fn max_neighbor_angle(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, nb) in self.adjacency.iter().enumerate() {
            for &n in nb {
                let c = self.directions[m].dot(&self.directions[n]).clamp(-1.0, 1.0);
                worst = worst.max(c.acos());
            }
        }
        worst
    }

    /// One row per cell: index, direction, weight, then the neighbor indices
    /// joined by `;`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "x", "y", "z", "weight", "neighbors"])?;
        let weights = self.quadrature_weights();
        for (m, d) in self.directions.iter().enumerate() {
            let nb: Vec<String> = self.adjacency[m].iter().map(|n| n.to_string()).collect();
            w.write_record([
                m.to_string(),
                d[0].to_string(),
                d[1].to_string(),
                d[2].to_string(),
                weights[m].to_string(),
                nb.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

//! Conical support bounds for acoustic sources.
//!
//! Given sampled far-field (or near-field) measurements of a wave radiated by a
//! compactly supported source, this crate computes small bi-conical space-time
//! sets `{ |t - tau| + |x - z| / c0 <= R }` that are guaranteed to support a
//! source producing the data. The pipeline is:
//!
//! 1. [`wavefield`]: analytic far fields of point-like sources, sampled on a
//!    time grid times a [`sphere::SphereMesh`] of receiver directions.
//! 2. [`noise`]: seeded uniform noise calibrated in the spectral norm.
//! 3. [`separation`]: per-receiver thresholds, time-support chains and their
//!    connected components across the mesh.
//! 4. [`csa`]: the two-step conical support search (global bound, then a
//!    shift-grid scan driven by per-direction support functions).
//!
//! [`nearfield`] covers the analogous backward/forward cone constructions for
//! boundary traces, [`geometry`] the space-time set primitives, and
//! [`diagnostics`] numerical checks of the far-field range conditions.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csa;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod io;
mod lp;
pub mod nearfield;
pub mod noise;
pub mod pipeline;
pub mod separation;
pub mod sphere;
mod union_find;
pub mod wavefield;

pub use error::{Error, Result};
pub use nalgebra::Vector3;

/// Default sound speed used by the bundled experiments.
pub const DEFAULT_C0: f64 = 1.0;

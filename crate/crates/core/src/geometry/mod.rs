//! Convex primitives in small Euclidean spaces: regions with open/closed
//! faces, support functions, projections, polar (normal) cones, disjointness
//! tests and a dense LP core.
//!
//! Every computation runs in R^n with n <= [`MAX_DIM`]. Polar cones and
//! projections work on closures; membership honours strictness flags.

mod cone;
pub(crate) mod dd;
mod disjoint;
pub mod linalg;
mod lp;
pub(crate) mod minnorm;
mod region;

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cone::{CompactConvexSet, Cone};
pub use disjoint::{regions_disjoint, DisjointMethod, DisjointVerdict};
pub use lp::{lp_solve, LpSolution};
pub use minnorm::min_norm_point;
pub use region::{BallRegion, BoxRegion, ConvexRegion, Halfspace, Polytope, RegionKind, STRICT_MARGIN};

/// Largest ambient dimension supported by the geometry layer.
pub const MAX_DIM: usize = 8;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("points must have at least one coordinate")]
    ZeroDimension,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("operation requires a non-empty region")]
    EmptyRegion,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program or region is unbounded")]
    Unbounded,
    #[error("simplex pivot limit reached")]
    PivotLimit,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<(), GeometryError> {
    if expected == found {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch { expected, found })
    }
}

/// A point (strategy or profile) in R^n with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn scalar(v: f64) -> Self {
        Point(vec![v])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

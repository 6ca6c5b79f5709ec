//! Convex geometry kernel: hulls, triangulations, volumes, membership and
//! polytope approximation of convex bodies, in dimensions 1 through 5.

mod approx;
pub(crate) mod hull;
mod locate;
pub(crate) mod io;
pub mod linalg;
pub mod lp;
mod polygon;
mod polytope;
mod triangulation;

use std::ops::Deref;

use thiserror::Error;

pub use approx::{inner_approx, outer_approx, Approximation};
pub use hull::{convex_hull, upper_hull_triangulation, UpperHull};
pub use locate::{CellLocator, Location};
pub use io::{parse_polytope, write_polytope};
pub use polygon::ConvexPolygon;
pub use polytope::{Facet, Halfspace, PolytopeH, PolytopeV};
pub use triangulation::{Simplex, Triangulation};

/// Largest ambient dimension the hull kernel supports.
pub const MAX_DIM: usize = 5;

/// Relative coplanarity tolerance; scaled by the bounding-box extent.
pub const COPLANAR_REL_TOL: f64 = 1e-10;

/// Absolute membership tolerance used by `contains`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("points lie in a proper affine subspace of R^{dim}")]
    DegenerateInput { dim: usize },
    #[error("need at least {needed} points in R^{dim}, got {got}")]
    TooFewPoints { dim: usize, needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} is not supported (1..={MAX_DIM})")]
    UnsupportedDimension(usize),
    #[error("facet budget {budget} is below d+1 = {min}")]
    InfeasibleBudget { budget: usize, min: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("halfspace system is unbounded")]
    Unbounded,
    #[error("halfspace system has empty interior")]
    EmptyInterior,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A point of R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Largest coordinate extent (or magnitude) of a point set; the scale that
/// multiplies [`COPLANAR_REL_TOL`].
pub(crate) fn bbox_scale<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    let Some(first) = points.first() else {
        return 1.0;
    };
    let d = first.as_ref().len();
    let mut scale = 0.0f64;
    for k in 0..d {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            let c = p.as_ref()[k];
            lo = lo.min(c);
            hi = hi.max(c);
        }
        scale = scale.max(hi - lo).max(lo.abs()).max(hi.abs());
    }
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

pub(crate) fn check_points<P: AsRef<[f64]>>(points: &[P]) -> Result<usize, GeometryError> {
    let d = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
    if d == 0 || d > MAX_DIM + 1 {
        return Err(GeometryError::UnsupportedDimension(d));
    }
    for p in points {
        let p = p.as_ref();
        if p.len() != d {
            return Err(GeometryError::DimensionMismatch { expected: d, got: p.len() });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
    }
    Ok(d)
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

//! Empirical measures and the quantities the sample-complexity argument
//! needs from them: convex-set discrepancy, level-set tails, VC shattering,
//! deviation curves and the multi-level sandwich.

mod discrepancy;
mod mass;
mod sandwich;
mod shatter;

use std::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::densities::DensityModel;
use crate::geometry::{dot, ConvexPolygon, GeometryError, Halfspace, Point, PolytopeV, MEMBERSHIP_TOL};

pub use discrepancy::{convex_discrepancy, vc_deviation_curve, CurvePoint, Discrepancy, DiscrepancyOptions};
pub use sandwich::{sandwich_construct, LevelReport, SandwichResult, SandwichVerification};
pub use shatter::{family_vc_bound, shattering_vc, ShatterResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmpiricalError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid set family: {0}")]
    InvalidFamily(String),
    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("unsupported density for this construction: {0}")]
    UnsupportedDensity(String),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `f_n(A) = #{i : X_i in A} / n`.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    samples: Vec<Point>,
}

impl EmpiricalMeasure {
    pub fn new(samples: Vec<Point>) -> Self {
        EmpiricalMeasure { samples }
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |p| p.dim())
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn mass(&self, region: &Region) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|x| region.contains(x)).count() as f64 / self.n() as f64
    }
}

/// The measure the samples were drawn from. The unit circle carries the
/// uniform arc-length measure; it has no density on the plane.
#[derive(Debug, Clone, Copy)]
pub enum TrueMeasure<'a> {
    Density(&'a DensityModel),
    UnitCircle,
}

impl TrueMeasure<'_> {
    pub fn dim(&self) -> usize {
        match self {
            TrueMeasure::Density(f) => f.dim(),
            TrueMeasure::UnitCircle => 2,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Point> {
        match self {
            TrueMeasure::Density(f) => f.sample(rng, count),
            TrueMeasure::UnitCircle => (0..count)
                .map(|_| {
                    let t = rng.random::<f64>() * 2.0 * PI;
                    Point::from([t.cos(), t.sin()])
                })
                .collect(),
        }
    }
}

impl<'a> From<&'a DensityModel> for TrueMeasure<'a> {
    fn from(f: &'a DensityModel) -> Self {
        TrueMeasure::Density(f)
    }
}

/// A measurable set with a membership test.
#[derive(Debug, Clone)]
pub enum Region {
    Empty,
    All,
    Halfspace(Halfspace),
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polygon(ConvexPolygon),
    Polytope(PolytopeV),
    Union(Vec<Region>),
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Empty => false,
            Region::All => true,
            Region::Halfspace(h) => dot(&h.normal, x) <= h.offset + MEMBERSHIP_TOL,
            Region::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= a - MEMBERSHIP_TOL && *v <= b + MEMBERSHIP_TOL)
            }
            Region::Polygon(p) => p.contains([x[0], x[1]]),
            Region::Polytope(p) => p.contains(x),
            Region::Union(parts) => parts.iter().any(|r| r.contains(x)),
        }
    }

    /// Short description for reports.
    pub fn describe(&self) -> String {
        let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>().join(" ");
        match self {
            Region::Empty => "empty".into(),
            Region::All => "all".into(),
            Region::Halfspace(h) => format!("halfspace [{}].x <= {:.4}", fmt(&h.normal), h.offset),
            Region::Box { lo, hi } => format!("box [{}]..[{}]", fmt(lo), fmt(hi)),
            Region::Polygon(p) => format!("polygon with {} vertices", p.vertices().len()),
            Region::Polytope(p) => format!("polytope with {} vertices", p.vertices().len()),
            Region::Union(parts) => format!("union of {} sets", parts.len()),
        }
    }
}

/// Families of sets over which discrepancy and shattering are measured.
#[derive(Debug, Clone)]
pub enum SetFamilySpec {
    /// The one-member family `{region}`.
    Single(Region),
    Halfspaces,
    AxisBoxes,
    /// Convex hulls of `k`-subsets of the sample.
    SubsetHulls { k: usize },
    /// Intersections of at most `facets` halfspaces.
    Polytopes { facets: usize },
    /// Boolean combinations of `levels` polytopes with `facets` facets each.
    Combos { levels: usize, facets: usize },
}

impl SetFamilySpec {
    /// Halflines in d = 1, halfplanes in d = 2, ...
    pub fn halfspaces() -> Self {
        SetFamilySpec::Halfspaces
    }

    /// Intervals in d = 1.
    pub fn intervals() -> Self {
        SetFamilySpec::Polytopes { facets: 2 }
    }

    pub fn label(&self) -> String {
        match self {
            SetFamilySpec::Single(r) => format!("single({})", r.describe()),
            SetFamilySpec::Halfspaces => "halfspaces".into(),
            SetFamilySpec::AxisBoxes => "axis-boxes".into(),
            SetFamilySpec::SubsetHulls { k } => format!("subset-hulls({k})"),
            SetFamilySpec::Polytopes { facets } => format!("polytopes({facets})"),
            SetFamilySpec::Combos { levels, facets } => format!("boolean-combos({levels},{facets})"),
        }
    }

    /// Checks parameters against the dimension and sample size.
    pub fn validate(&self, d: usize, n: usize) -> Result<(), EmpiricalError> {
        match *self {
            SetFamilySpec::SubsetHulls { k } if k == 0 || k > n => {
                Err(EmpiricalError::InvalidFamily(format!("subset size k = {k} must lie in 1..={n}")))
            }
            SetFamilySpec::Polytopes { facets } if facets == 0 || (d > 1 && facets < d + 1) => Err(
                EmpiricalError::InvalidFamily(format!("facet budget {facets} is below d+1 = {}", d + 1)),
            ),
            SetFamilySpec::Combos { levels, facets } if levels * facets == 0 => {
                Err(EmpiricalError::InvalidFamily("need L*H >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for SetFamilySpec {
    type Err = String;

    /// `halfspaces`, `boxes`, `intervals`, `hulls:k`, `polytopes:l`,
    /// `combos:L:H`, `all`.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<usize, String> {
            parts.get(i).ok_or(format!("family '{s}' is missing a parameter"))?.parse().map_err(|e| format!("{s}: {e}"))
        };
        match parts[0] {
            "halfspaces" | "halflines" | "halfplanes" => Ok(SetFamilySpec::Halfspaces),
            "boxes" | "axis-boxes" => Ok(SetFamilySpec::AxisBoxes),
            "intervals" => Ok(SetFamilySpec::intervals()),
            "hulls" | "subset-hulls" => Ok(SetFamilySpec::SubsetHulls { k: num(1)? }),
            "polytopes" => Ok(SetFamilySpec::Polytopes { facets: num(1)? }),
            "combos" => Ok(SetFamilySpec::Combos { levels: num(1)?, facets: num(2)? }),
            "all" => Ok(SetFamilySpec::Single(Region::All)),
            _ => Err(format!("unknown set family '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub prob: f64,
    pub stderr: f64,
    /// `prob / e^{-w/2}`
    pub bound_ratio: f64,
}

/// `Pr_{X ~ f}[f(X) <= M_f e^{-w}]` by sampling.
pub fn tail_probability<R: Rng + ?Sized>(f: &DensityModel, w: f64, budget: usize, rng: &mut R) -> TailEstimate {
    assert!(w >= 0.0, "w must be nonnegative");
    let cut = f.ln_max() - w;
    let draws = f.sample(rng, budget);
    let hits = draws.iter().filter(|x| f.ln_pdf(x) <= cut).count();
    let prob = hits as f64 / budget as f64;
    TailEstimate {
        prob,
        stderr: (prob * (1.0 - prob) / budget as f64).sqrt(),
        bound_ratio: prob / (-w / 2.0).exp(),
    }
}

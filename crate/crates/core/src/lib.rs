//! Log-concave maximum likelihood estimation and the numerical machinery
//! used to probe its sample complexity.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: convex hulls in up to five dimensions, upper-hull
//!   triangulations, polytope volumes, and inner/outer polytope
//!   approximations of convex bodies.
//! - [`densities`]: reference log-concave families and tent densities,
//!   including the exact integral of `exp` of an affine function over a
//!   simplex.
//! - [`mle`]: the tent-function maximum likelihood solver, the truncation
//!   transform and likelihood bookkeeping.
//! - [`distances`]: Monte Carlo Hellinger, total variation and KL estimates.
//! - [`empirical`]: empirical measures, convex-set discrepancy, VC
//!   shattering, deviation curves and the multi-level sandwich construction.
//! - [`bounds`]: closed-form schedule and sample-size calculators.
//! - [`harness`]: configuration, rate experiments, slope fits and plots.

pub mod bounds;
pub mod densities;
pub mod distances;
pub mod empirical;
pub mod geometry;
pub mod harness;
pub mod mle;
pub mod rng;

mod timing;

pub use densities::{DensityModel, TentDensity};
pub use geometry::{Point, PolytopeH, PolytopeV, Triangulation};
pub use mle::{fit_mle, MleSolution, SolverOptions};

//! The log-concave maximum likelihood estimator over tent functions, the
//! truncation transform and likelihood bookkeeping.

mod solver;
mod solver1d;
mod truncate;

use std::collections::HashMap;

use thiserror::Error;

use crate::densities::{DensityError, DensityModel, TentDensity};
use crate::geometry::{GeometryError, Point, Simplex};
use crate::timing::Stopwatch;

pub use truncate::{max_value_guard, truncate_renormalize, MaxValueReport, TruncatedDensity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MleError {
    #[error("samples are degenerate: {0}")]
    DegenerateInput(GeometryError),
    #[error("need at least d+1 = {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("dimension {0} is not supported (d=4 needs the experimental flag)")]
    UnsupportedDimension(usize),
    #[error("S does not contain the support of the estimate")]
    RegionTooSmall,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Density(#[from] DensityError),
}

impl From<GeometryError> for MleError {
    fn from(e: GeometryError) -> Self {
        MleError::DegenerateInput(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Target for the optimality residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Stop when the objective moves by less than `stagnation_rel`
    /// (relative) over this many iterations.
    pub stagnation_window: usize,
    pub stagnation_rel: f64,
    /// Allow d = 4.
    pub experimental: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 500,
            stagnation_window: 50,
            stagnation_rel: 1e-9,
            experimental: false,
        }
    }
}

/// A fitted estimate.
#[derive(Debug, Clone)]
pub struct MleSolution {
    pub density: TentDensity,
    /// `sigma(y) - 1` at the returned heights, i.e. the negative mean
    /// log-likelihood (the mass is one).
    pub objective: f64,
    pub iterations: usize,
    /// Norm of the optimality residual: reduced gradient over the vertex
    /// heights plus negative insertion slopes of non-vertex points.
    pub subgradient_norm: f64,
    pub total_mass: f64,
    pub wall_time: f64,
    pub converged: bool,
    /// Why the solver stopped.
    pub status: &'static str,
    /// Number of distinct sample points.
    pub distinct_points: usize,
}

impl MleSolution {
    pub fn model(&self) -> DensityModel {
        DensityModel::Tent(self.density.clone())
    }
}

/// Merges duplicate points; returns distinct points and weights summing to 1.
fn merge_duplicates(samples: &[Point]) -> (Vec<Point>, Vec<f64>) {
    let n = samples.len() as f64;
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut pts = Vec::new();
    let mut w: Vec<f64> = Vec::new();
    for p in samples {
        let key: Vec<u64> = p.iter().map(|c| (c + 0.0).to_bits()).collect();
        match seen.get(&key) {
            Some(&i) => w[i] += 1.0 / n,
            None => {
                seen.insert(key, pts.len());
                pts.push(p.clone());
                w.push(1.0 / n);
            }
        }
    }
    (pts, w)
}

pub fn fit_mle(samples: &[Point], options: &SolverOptions) -> Result<MleSolution, MleError> {
    let clock = Stopwatch::start();
    let d = samples.first().map_or(0, |p| p.dim());
    if d == 0 {
        return Err(MleError::TooFewSamples { needed: 2, got: samples.len() });
    }
    if d > 4 || (d == 4 && !options.experimental) {
        return Err(MleError::UnsupportedDimension(d));
    }
    if samples.iter().any(|p| p.dim() != d) {
        return Err(GeometryError::DimensionMismatch { expected: d, got: 0 }.into());
    }
    if samples.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite.into());
    }
    let (pts, w) = merge_duplicates(samples);
    if pts.len() < d + 1 {
        return Err(MleError::TooFewSamples { needed: d + 1, got: pts.len() });
    }
    if d > 1 {
        crate::geometry::hull::quickhull(&pts)?;
    }
    let out = if d == 1 { solver1d::solve_1d(&pts, &w, options)? } else { solver::solve(&pts, &w, options)? };
    let cells = out.cells.into_iter().map(Simplex::new).collect();
    let density = TentDensity::from_cells(pts.clone(), out.heights, cells, 0.0)?;
    Ok(MleSolution {
        total_mass: density.total_mass(),
        density,
        objective: out.sigma - 1.0,
        iterations: out.iterations,
        subgradient_norm: out.residual,
        wall_time: clock.elapsed_secs(),
        converged: out.converged,
        status: out.note,
        distinct_points: pts.len(),
    })
}

/// Mean of `ln f(X_i)`; `-inf` when any sample is outside the support.
pub fn empirical_log_likelihood(f: &DensityModel, samples: &[Point]) -> Result<f64, DensityError> {
    let mut total = 0.0;
    for x in samples {
        total += f.log_eval(x)?;
    }
    Ok(total / samples.len() as f64)
}

//! Log-concave density models: Gaussians, uniform densities on polytopes,
//! product Laplace densities and tent densities.

pub mod expint;
mod tent;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use thiserror::Error;

use crate::geometry::linalg::factorial;
use crate::geometry::{GeometryError, Point, PolytopeH, PolytopeV, Triangulation};

pub use expint::{cell_terms, divided_difference_exp, exp_affine_integral, CellTerms};
pub use tent::{parse_tent, write_tent, TentDensity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate simplex")]
    DegenerateSimplex,
    #[error("non-finite value")]
    NonFinite,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Multivariate normal density.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: Vec<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self, DensityError> {
        let d = mean.len();
        if d == 0 || cov.len() != d * d {
            return Err(DensityError::DimensionMismatch { expected: d * d, got: cov.len() });
        }
        let cov = DMatrix::from_row_slice(d, d, &cov);
        if (&cov - cov.transpose()).abs().max() > 1e-12 * cov.abs().max() {
            return Err(DensityError::InvalidParameter("covariance is not symmetric".into()));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| DensityError::InvalidParameter("covariance is not positive definite".into()))?
            .l();
        let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Gaussian { mean, cov, chol, log_det })
    }

    pub fn standard(d: usize) -> Self {
        let mut cov = vec![0.0; d * d];
        for k in 0..d {
            cov[k * d + k] = 1.0;
        }
        Gaussian::new(vec![0.0; d], cov).unwrap()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower Cholesky factor of the covariance.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `(x - mean)^T cov^{-1} (x - mean)`.
    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        let r = DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(a, b)| a - b));
        let z = self.chol.solve_lower_triangular(&r).unwrap();
        z.norm_squared()
    }

    fn ln_max(&self) -> f64 {
        -0.5 * (self.mean.len() as f64 * (2.0 * PI).ln() + self.log_det)
    }
}

/// Uniform density on a polytope.
#[derive(Debug, Clone)]
pub struct UniformPolytope {
    polytope: PolytopeV,
    halfspaces: PolytopeH,
    volume: f64,
    cells: Triangulation,
    cumulative: Vec<f64>,
}

impl UniformPolytope {
    pub fn new(polytope: PolytopeV) -> Self {
        let halfspaces = polytope.halfspaces();
        let cells = polytope.triangulate();
        let mut acc = 0.0;
        let cumulative = cells
            .simplices
            .iter()
            .map(|s| {
                acc += cells.simplex_volume(s);
                acc
            })
            .collect();
        UniformPolytope { volume: polytope.volume(), polytope, halfspaces, cells, cumulative }
    }

    pub fn polytope(&self) -> &PolytopeV {
        &self.polytope
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }
}

/// Product of centred Laplace densities `exp(-|x_k|/b_k) / (2 b_k)`.
#[derive(Debug, Clone)]
pub struct ProductLaplace {
    scales: Vec<f64>,
}

impl ProductLaplace {
    pub fn new(scales: Vec<f64>) -> Result<Self, DensityError> {
        if scales.is_empty() || scales.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(DensityError::InvalidParameter("Laplace scales must be positive".into()));
        }
        Ok(ProductLaplace { scales })
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

/// A reference log-concave density.
#[derive(Debug, Clone)]
pub enum DensityModel {
    Gaussian(Gaussian),
    UniformPolytope(UniformPolytope),
    ProductLaplace(ProductLaplace),
    Tent(TentDensity),
}

impl From<Gaussian> for DensityModel {
    fn from(g: Gaussian) -> Self {
        DensityModel::Gaussian(g)
    }
}

impl From<UniformPolytope> for DensityModel {
    fn from(u: UniformPolytope) -> Self {
        DensityModel::UniformPolytope(u)
    }
}

impl From<ProductLaplace> for DensityModel {
    fn from(l: ProductLaplace) -> Self {
        DensityModel::ProductLaplace(l)
    }
}

impl From<TentDensity> for DensityModel {
    fn from(t: TentDensity) -> Self {
        DensityModel::Tent(t)
    }
}

/// Uniform sample from the simplex with vertices `pts`.
pub(crate) fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, pts: &[&[f64]], out: &mut [f64]) {
    let mut w = [0.0; 8];
    let w = &mut w[..pts.len()];
    let mut total = 0.0;
    for wi in w.iter_mut() {
        *wi = Exp1.sample(rng);
        total += *wi;
    }
    out.iter_mut().for_each(|o| *o = 0.0);
    for (p, wi) in pts.iter().zip(w.iter()) {
        for (o, c) in out.iter_mut().zip(p.iter()) {
            *o += wi / total * c;
        }
    }
}

impl DensityModel {
    pub fn standard_gaussian(d: usize) -> Self {
        Gaussian::standard(d).into()
    }

    /// Uniform on the axis-aligned box `[lo, hi]`.
    pub fn uniform_box(lo: &[f64], hi: &[f64]) -> Result<Self, DensityError> {
        let d = lo.len();
        if hi.len() != d || d == 0 {
            return Err(DensityError::DimensionMismatch { expected: d, got: hi.len() });
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return Err(DensityError::InvalidParameter("box must have lo < hi".into()));
        }
        let corners: Vec<Point> = (0..1usize << d)
            .map(|m| Point::new((0..d).map(|k| if m >> k & 1 == 1 { hi[k] } else { lo[k] }).collect()))
            .collect();
        Ok(UniformPolytope::new(crate::geometry::convex_hull(&corners)?).into())
    }

    pub fn dim(&self) -> usize {
        match self {
            DensityModel::Gaussian(g) => g.mean.len(),
            DensityModel::UniformPolytope(u) => u.polytope.dim(),
            DensityModel::ProductLaplace(l) => l.scales.len(),
            DensityModel::Tent(t) => t.dim(),
        }
    }

    /// Short identifier used in reports.
    pub fn label(&self) -> String {
        match self {
            DensityModel::Gaussian(g) => format!("gaussian-d{}", g.mean.len()),
            DensityModel::UniformPolytope(u) => format!("uniform-d{}", u.polytope.dim()),
            DensityModel::ProductLaplace(l) => format!("laplace-d{}", l.scales.len()),
            DensityModel::Tent(t) => format!("tent-d{}", t.dim()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), DensityError> {
        if x.len() != self.dim() {
            return Err(DensityError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Log-density at `x`; `-inf` outside the support.
    pub fn log_eval(&self, x: &[f64]) -> Result<f64, DensityError> {
        self.check_dim(x)?;
        Ok(self.ln_pdf(x))
    }

    /// Unchecked log-density for hot loops.
    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        match self {
            DensityModel::Gaussian(g) => g.ln_max() - 0.5 * g.mahalanobis_sq(x),
            DensityModel::UniformPolytope(u) => {
                if u.halfspaces.contains(x) {
                    -u.volume.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            DensityModel::ProductLaplace(l) => l
                .scales
                .iter()
                .zip(x)
                .map(|(b, xi)| -(2.0 * b).ln() - xi.abs() / b)
                .sum(),
            DensityModel::Tent(t) => t.ln_pdf(x),
        }
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `ln M_f`.
    pub fn ln_max(&self) -> f64 {
        match self {
            DensityModel::Gaussian(g) => g.ln_max(),
            DensityModel::UniformPolytope(u) => -u.volume.ln(),
            DensityModel::ProductLaplace(l) => -l.scales.iter().map(|b| (2.0 * b).ln()).sum::<f64>(),
            DensityModel::Tent(t) => t.ln_max(),
        }
    }

    /// `M_f`, the maximum density value.
    pub fn max_value(&self) -> f64 {
        self.ln_max().exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Point> {
        let d = self.dim();
        let mut out = Vec::with_capacity(count);
        match self {
            DensityModel::Gaussian(g) => {
                for _ in 0..count {
                    let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
                    let x = &g.chol * z;
                    out.push(Point::new(x.iter().zip(&g.mean).map(|(a, m)| a + m).collect()));
                }
            }
            DensityModel::UniformPolytope(u) => {
                let total = *u.cumulative.last().unwrap();
                for _ in 0..count {
                    let r = rng.random::<f64>() * total;
                    let c = u.cumulative.partition_point(|&a| a <= r).min(u.cumulative.len() - 1);
                    let pts = u.cells.simplex_points(&u.cells.simplices[c]);
                    let mut x = vec![0.0; d];
                    sample_simplex(rng, &pts, &mut x);
                    out.push(Point::new(x));
                }
            }
            DensityModel::ProductLaplace(l) => {
                for _ in 0..count {
                    let x = l
                        .scales
                        .iter()
                        .map(|b| {
                            let e: f64 = Exp1.sample(rng);
                            if rng.random::<bool>() {
                                b * e
                            } else {
                                -b * e
                            }
                        })
                        .collect();
                    out.push(Point::new(x));
                }
            }
            DensityModel::Tent(t) => return t.sample(rng, count),
        }
        out
    }

    /// `vol({x : f(x) >= y})`.
    pub fn superlevel_volume(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return f64::INFINITY.min(match self {
                DensityModel::UniformPolytope(u) => u.volume,
                DensityModel::Tent(t) => t.support().volume(),
                _ => f64::INFINITY,
            });
        }
        let w = self.ln_max() - y.ln();
        if w < 0.0 {
            return 0.0;
        }
        let d = self.dim();
        match self {
            DensityModel::Gaussian(g) => {
                unit_ball_volume(d) * (2.0 * w).powf(d as f64 / 2.0) * (0.5 * g.log_det).exp()
            }
            DensityModel::UniformPolytope(u) => u.volume,
            DensityModel::ProductLaplace(l) => {
                2f64.powi(d as i32) / factorial(d) * w.powi(d as i32) * l.scales.iter().product::<f64>()
            }
            DensityModel::Tent(t) => t.superlevel_volume(y),
        }
    }

    /// A box outside which the density integrates to at most about `tail`.
    pub fn effective_box(&self, tail: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        match self {
            DensityModel::Gaussian(g) => {
                // Per-axis normal tail with a union bound over axes.
                let z = normal_quantile_upper(tail / (2.0 * d as f64));
                let lo = (0..d).map(|k| g.mean[k] - z * g.cov[(k, k)].sqrt()).collect();
                let hi = (0..d).map(|k| g.mean[k] + z * g.cov[(k, k)].sqrt()).collect();
                (lo, hi)
            }
            DensityModel::ProductLaplace(l) => {
                let t = (d as f64 / tail).ln().max(1.0);
                (l.scales.iter().map(|b| -b * t).collect(), l.scales.iter().map(|b| b * t).collect())
            }
            DensityModel::UniformPolytope(u) => vertex_box(u.polytope.vertices()),
            DensityModel::Tent(t) => vertex_box(t.support().vertices()),
        }
    }
}

fn vertex_box(v: &[Point]) -> (Vec<f64>, Vec<f64>) {
    let d = v[0].dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in v {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_quantile_upper(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    -Normal::standard().inverse_cdf(p.clamp(1e-300, 0.5))
}

/// Volume of the unit Euclidean ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / statrs::function::gamma::gamma(h + 1.0)
}

/// `{x : f(x) >= y}` for a density and threshold.
#[derive(Debug, Clone, Copy)]
pub struct LevelSetQuery<'a> {
    pub density: &'a DensityModel,
    pub threshold: f64,
}

impl LevelSetQuery<'_> {
    pub fn volume(&self) -> f64 {
        self.density.superlevel_volume(self.threshold)
    }
}

//! Monte Carlo and grid estimates of squared Hellinger distance, total
//! variation and KL divergence between density models.
//!
//! Hellinger and TV sample the balanced mixture `m = (f + g) / 2`, half the
//! draws from each component, so the integrands stay bounded even when the
//! supports differ.

use rand::Rng;
use thiserror::Error;

use crate::densities::DensityModel;

pub const DEFAULT_BUDGET: usize = 100_000;
pub const MIN_BUDGET: usize = 100;
pub const GRID_CELLS: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("budget {0} is below the minimum of 100 draws")]
    BudgetTooSmall(usize),
    #[error("grid quadrature supports d <= 2, got d = {0}")]
    GridDimension(usize),
    #[error("statistic is not finite on the draws")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MonteCarloMixture,
    MonteCarlo,
    GridQuadrature,
    ClosedForm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MonteCarloMixture => "monte-carlo-mixture",
            Method::MonteCarlo => "monte-carlo",
            Method::GridQuadrature => "grid-quadrature",
            Method::ClosedForm => "closed-form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEstimate {
    /// `+inf` for an infinite KL divergence.
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
    pub draws_or_cells: usize,
}

impl DistanceEstimate {
    pub fn is_infinite(&self) -> bool {
        self.value == f64::INFINITY
    }

    /// `value,stderr,method,draws`
    pub fn csv_line(&self) -> String {
        let v = if self.is_infinite() { "inf".to_string() } else { format!("{}", self.value) };
        format!("{v},{},{},{}", self.stderr, self.method.name(), self.draws_or_cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    HellingerSq,
    Tv,
    Kl,
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hellinger" | "hellinger_sq" | "h2" => Ok(Metric::HellingerSq),
            "tv" => Ok(Metric::Tv),
            "kl" => Ok(Metric::Kl),
            _ => Err(format!("unknown metric '{s}' (hellinger, tv, kl)")),
        }
    }
}

fn check(f: &DensityModel, g: &DensityModel, budget: usize) -> Result<(), DistanceError> {
    if f.dim() != g.dim() {
        return Err(DistanceError::DimensionMismatch(f.dim(), g.dim()));
    }
    if budget < MIN_BUDGET {
        return Err(DistanceError::BudgetTooSmall(budget));
    }
    Ok(())
}

/// Running mean and variance.
#[derive(Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    /// Variance of the mean.
    fn var_mean(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / (self.n - 1) as f64 / self.n as f64
    }
}

/// `E_m[k(ln f, ln g)]` with half the budget from each component.
fn mixture_mean<R, K>(f: &DensityModel, g: &DensityModel, budget: usize, rng: &mut R, k: K) -> (f64, f64)
where
    R: Rng + ?Sized,
    K: Fn(f64, f64) -> f64,
{
    let half = budget / 2;
    let mut parts = [Moments::default(), Moments::default()];
    for (part, (src, n)) in parts.iter_mut().zip([(f, half), (g, budget - half)]) {
        for x in src.sample(rng, n) {
            part.push(k(f.ln_pdf(&x), g.ln_pdf(&x)));
        }
    }
    let mean = 0.5 * (parts[0].mean + parts[1].mean);
    let se = 0.5 * (parts[0].var_mean() + parts[1].var_mean()).sqrt();
    (mean, se)
}

/// `sqrt(fg) / m`.
fn affinity_ratio(lf: f64, lg: f64) -> f64 {
    if lf == f64::NEG_INFINITY || lg == f64::NEG_INFINITY {
        return 0.0;
    }
    1.0 / (0.5 * (lf - lg)).cosh()
}

/// `|f - g| / (2m)`.
fn tv_ratio(lf: f64, lg: f64) -> f64 {
    match (lf == f64::NEG_INFINITY, lg == f64::NEG_INFINITY) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => (0.5 * (lf - lg)).tanh().abs(),
    }
}

/// `h^2(f, g) = 1 - ∫ sqrt(fg)`.
pub fn hellinger_sq<R: Rng + ?Sized>(
    f: &DensityModel,
    g: &DensityModel,
    budget: usize,
    rng: &mut R,
) -> Result<DistanceEstimate, DistanceError> {
    check(f, g, budget)?;
    let (a, se) = mixture_mean(f, g, budget, rng, affinity_ratio);
    Ok(DistanceEstimate {
        value: 1.0 - a,
        stderr: se,
        method: Method::MonteCarloMixture,
        draws_or_cells: budget,
    })
}

/// `d_TV(f, g) = ½ ∫ |f - g|`.
pub fn tv_distance<R: Rng + ?Sized>(
    f: &DensityModel,
    g: &DensityModel,
    budget: usize,
    rng: &mut R,
) -> Result<DistanceEstimate, DistanceError> {
    check(f, g, budget)?;
    let (v, se) = mixture_mean(f, g, budget, rng, tv_ratio);
    Ok(DistanceEstimate {
        value: v,
        stderr: se,
        method: Method::MonteCarloMixture,
        draws_or_cells: budget,
    })
}

/// `KL(f || g)` from draws of `f`. A draw where `g` vanishes makes the
/// result infinite.
pub fn kl_divergence<R: Rng + ?Sized>(
    f: &DensityModel,
    g: &DensityModel,
    budget: usize,
    rng: &mut R,
) -> Result<DistanceEstimate, DistanceError> {
    check(f, g, budget)?;
    let mut m = Moments::default();
    for x in f.sample(rng, budget) {
        let lg = g.ln_pdf(&x);
        if lg == f64::NEG_INFINITY {
            return Ok(DistanceEstimate {
                value: f64::INFINITY,
                stderr: 0.0,
                method: Method::MonteCarlo,
                draws_or_cells: budget,
            });
        }
        m.push(f.ln_pdf(&x) - lg);
    }
    Ok(DistanceEstimate {
        value: m.mean,
        stderr: m.var_mean().sqrt(),
        method: Method::MonteCarlo,
        draws_or_cells: budget,
    })
}

pub fn estimate<R: Rng + ?Sized>(
    metric: Metric,
    f: &DensityModel,
    g: &DensityModel,
    budget: usize,
    rng: &mut R,
) -> Result<DistanceEstimate, DistanceError> {
    match metric {
        Metric::HellingerSq => hellinger_sq(f, g, budget, rng),
        Metric::Tv => tv_distance(f, g, budget, rng),
        Metric::Kl => kl_divergence(f, g, budget, rng),
    }
}

/// Midpoint rule on a tensor grid over the union of the two effective
/// bounding boxes, `cells` per axis. Only d <= 2.
pub fn grid_quadrature(
    metric: Metric,
    f: &DensityModel,
    g: &DensityModel,
    cells: usize,
) -> Result<DistanceEstimate, DistanceError> {
    let d = f.dim();
    if d != g.dim() {
        return Err(DistanceError::DimensionMismatch(d, g.dim()));
    }
    if d > 2 {
        return Err(DistanceError::GridDimension(d));
    }
    let (mut lo, mut hi) = f.effective_box(1e-12);
    let (glo, ghi) = g.effective_box(1e-12);
    for k in 0..d {
        lo[k] = lo[k].min(glo[k]);
        hi[k] = hi[k].max(ghi[k]);
    }
    let step: Vec<f64> = (0..d).map(|k| (hi[k] - lo[k]) / cells as f64).collect();
    let dv: f64 = step.iter().product();
    let total = cells.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    let mut infinite = false;
    for idx in 0..total {
        let mut r = idx;
        for k in 0..d {
            x[k] = lo[k] + ((r % cells) as f64 + 0.5) * step[k];
            r /= cells;
        }
        let (lf, lg) = (f.ln_pdf(&x), g.ln_pdf(&x));
        let (pf, pg) = (lf.exp(), lg.exp());
        acc += match metric {
            Metric::HellingerSq => (pf * pg).sqrt(),
            Metric::Tv => (pf - pg).abs(),
            Metric::Kl if pf == 0.0 => 0.0,
            Metric::Kl if pg == 0.0 => {
                infinite = true;
                0.0
            }
            Metric::Kl => pf * (lf - lg),
        };
    }
    let value = match metric {
        Metric::HellingerSq => 1.0 - acc * dv,
        Metric::Tv => 0.5 * acc * dv,
        Metric::Kl if infinite => f64::INFINITY,
        Metric::Kl => acc * dv,
    };
    Ok(DistanceEstimate {
        value,
        stderr: 0.0,
        method: Method::GridQuadrature,
        draws_or_cells: total,
    })
}

/// Closed forms between two Gaussians with equal covariance.
pub fn gaussian_closed_form(metric: Metric, f: &DensityModel, g: &DensityModel) -> Option<DistanceEstimate> {
    let (DensityModel::Gaussian(a), DensityModel::Gaussian(b)) = (f, g) else {
        return None;
    };
    if a.cov() != b.cov() {
        return None;
    }
    let delta2 = b.mahalanobis_sq(a.mean());
    let value = match metric {
        Metric::HellingerSq => 1.0 - (-delta2 / 8.0).exp(),
        Metric::Tv => 2.0 * crate::densities::std_normal_cdf(0.5 * delta2.sqrt()) - 1.0,
        Metric::Kl => 0.5 * delta2,
    };
    Some(DistanceEstimate {
        value,
        stderr: 0.0,
        method: Method::ClosedForm,
        draws_or_cells: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// Grid over the range of the pooled statistic values.
    Auto { cells: usize },
    Fixed { lo: f64, hi: f64, cells: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfGap {
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub holds: bool,
}

/// Compares `|E_g φ - E_h φ|` with `∫ |P_g[φ < x] - P_h[φ < x]| dx`, both
/// from `draws` samples of each density.
pub fn cdf_gap_check<R, F>(
    g: &DensityModel,
    h: &DensityModel,
    phi: F,
    grid: GridSpec,
    draws: usize,
    rng: &mut R,
) -> Result<CdfGap, DistanceError>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    check(g, h, draws)?;
    let eval = |m: &DensityModel, rng: &mut R| -> Result<(Vec<f64>, Moments), DistanceError> {
        let mut mo = Moments::default();
        let mut v: Vec<f64> = Vec::with_capacity(draws);
        for x in m.sample(rng, draws) {
            let p = phi(x.coords());
            if !p.is_finite() {
                return Err(DistanceError::NonFinite);
            }
            mo.push(p);
            v.push(p);
        }
        v.sort_by(f64::total_cmp);
        Ok((v, mo))
    };
    let (vg, mg) = eval(g, rng)?;
    let (vh, mh) = eval(h, rng)?;
    let lhs = (mg.mean - mh.mean).abs();
    let stderr = (mg.var_mean() + mh.var_mean()).sqrt();

    let (lo, hi, cells) = match grid {
        GridSpec::Fixed { lo, hi, cells } => (lo, hi, cells),
        GridSpec::Auto { cells } => (vg[0].min(vh[0]), vg[draws - 1].max(vh[draws - 1]), cells),
    };
    let cdf = |v: &[f64], x: f64| v.partition_point(|&a| a < x) as f64 / v.len() as f64;
    let mut rhs = 0.0;
    if hi > lo && cells > 0 {
        let dx = (hi - lo) / cells as f64;
        for i in 0..cells {
            let x = lo + (i as f64 + 0.5) * dx;
            rhs += (cdf(&vg, x) - cdf(&vh, x)).abs() * dx;
        }
    }
    Ok(CdfGap {
        lhs,
        rhs,
        stderr,
        holds: lhs <= rhs + 3.0 * stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::Gaussian;
    use crate::rng::stream;

    fn unif(a: f64, b: f64) -> DensityModel {
        DensityModel::uniform_box(&[a], &[b]).unwrap()
    }

    #[test]
    fn disjoint_uniforms() {
        let mut rng = stream(3, 0);
        let (f, g) = (unif(0.0, 1.0), unif(2.0, 3.0));
        assert_eq!(hellinger_sq(&f, &g, 1000, &mut rng).unwrap().value, 1.0);
        assert_eq!(tv_distance(&f, &g, 1000, &mut rng).unwrap().value, 1.0);
    }

    #[test]
    fn identical_models_are_at_distance_zero() {
        let mut rng = stream(3, 1);
        let f = DensityModel::standard_gaussian(2);
        assert!(hellinger_sq(&f, &f, 1000, &mut rng).unwrap().value.abs() < 1e-15);
        assert_eq!(tv_distance(&f, &f, 1000, &mut rng).unwrap().value, 0.0);
        assert_eq!(kl_divergence(&f, &f, 1000, &mut rng).unwrap().value, 0.0);
    }

    #[test]
    fn kl_into_a_smaller_support_is_infinite() {
        let mut rng = stream(3, 2);
        let kl = kl_divergence(&DensityModel::standard_gaussian(1), &unif(0.0, 1.0), 1000, &mut rng).unwrap();
        assert!(kl.is_infinite());
        assert!(kl.csv_line().starts_with("inf,"));
    }

    #[test]
    fn small_budget_is_rejected() {
        let f = DensityModel::standard_gaussian(1);
        let mut rng = stream(3, 3);
        assert_eq!(hellinger_sq(&f, &f, 99, &mut rng), Err(DistanceError::BudgetTooSmall(99)));
        let g = DensityModel::standard_gaussian(2);
        assert!(matches!(tv_distance(&f, &g, 1000, &mut rng), Err(DistanceError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn closed_form_unit_shift() {
        let f = DensityModel::standard_gaussian(1);
        let g: DensityModel = Gaussian::new(vec![1.0], vec![1.0]).unwrap().into();
        let h = gaussian_closed_form(Metric::HellingerSq, &f, &g).unwrap().value;
        assert!((h - (1.0 - (-0.125f64).exp())).abs() < 1e-15);
        assert!((gaussian_closed_form(Metric::Kl, &f, &g).unwrap().value - 0.5).abs() < 1e-14);
        assert!((gaussian_closed_form(Metric::Tv, &f, &g).unwrap().value - 0.3829249225480262).abs() < 1e-12);
    }

    #[test]
    fn grid_matches_closed_form() {
        let f = DensityModel::standard_gaussian(1);
        let g: DensityModel = Gaussian::new(vec![1.0], vec![1.0]).unwrap().into();
        for m in [Metric::HellingerSq, Metric::Tv, Metric::Kl] {
            let a = grid_quadrature(m, &f, &g, 4096).unwrap().value;
            let b = gaussian_closed_form(m, &f, &g).unwrap().value;
            assert!((a - b).abs() < 1e-5, "{m:?} {a} {b}");
        }
    }

    #[test]
    fn uniform_cdf_gap() {
        let mut rng = stream(3, 4);
        let r = cdf_gap_check(&unif(0.0, 1.0), &unif(0.0, 2.0), |x| x[0], GridSpec::Auto { cells: 2000 }, 100_000, &mut rng)
            .unwrap();
        assert!((r.lhs - 0.5).abs() < 0.01 && (r.rhs - 0.5).abs() < 0.01 && r.holds);
        let c = cdf_gap_check(&unif(0.0, 1.0), &unif(0.0, 2.0), |_| 1.0, GridSpec::Auto { cells: 10 }, 1000, &mut rng).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.holds);
    }
}

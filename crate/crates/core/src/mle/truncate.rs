//! Truncation and renormalisation of a fitted estimate, and the
//! maximum-value guard.

use super::{MleError, MleSolution};
use crate::bounds::{mle_max_threshold, ScheduleParams};
use crate::densities::exp_affine_integral;
use crate::geometry::{PolytopeV, MEMBERSHIP_TOL};

/// `g(x) = alpha * max(p_min, fhat(x))` on `S`, zero outside.
#[derive(Debug, Clone)]
pub struct TruncatedDensity {
    pub p_min: f64,
    pub region: PolytopeV,
    pub alpha: f64,
    /// `p_min * vol(S)`.
    pub floor_mass: f64,
    base: crate::densities::TentDensity,
}

impl TruncatedDensity {
    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        if !self.region.contains(x) {
            return f64::NEG_INFINITY;
        }
        self.alpha.ln() + self.base.ln_pdf(x).max(self.p_min.ln())
    }
}

/// `∫_s max(e^{l}, p)` for affine `l` with vertex values `v` on the simplex
/// `pts`, splitting at the level `ln p`.
fn floored_integral(pts: &[&[f64]], v: &[f64], p: f64) -> f64 {
    let t = p.ln();
    let vol = crate::geometry::linalg::simplex_det(pts).abs() / crate::geometry::linalg::factorial(pts.len() - 1);
    if v.iter().all(|&a| a >= t) {
        return exp_affine_integral(pts, v).unwrap_or(0.0);
    }
    if v.iter().all(|&a| a <= t) {
        return p * vol;
    }
    // Split the simplex by the hyperplane l = t into two convex pieces and
    // triangulate each by hull.
    let d = pts.len() - 1;
    let mut above = Vec::new();
    let mut below = Vec::new();
    for (a, (&pa, &va)) in pts.iter().zip(v).enumerate() {
        if va >= t {
            above.push((pa.to_vec(), va));
        }
        if va <= t {
            below.push((pa.to_vec(), va));
        }
        for (&pb, &vb) in pts[a + 1..].iter().zip(&v[a + 1..]) {
            if (va - t) * (vb - t) < 0.0 {
                let u = (t - va) / (vb - va);
                let x: Vec<f64> = (0..d).map(|k| pa[k] + u * (pb[k] - pa[k])).collect();
                above.push((x.clone(), t));
                below.push((x, t));
            }
        }
    }
    let mut total = 0.0;
    for (part, exp_part) in [(above, true), (below, false)] {
        let points: Vec<crate::geometry::Point> = part.iter().map(|(x, _)| x.clone().into()).collect();
        let Ok(poly) = crate::geometry::convex_hull(&points) else { continue };
        if !exp_part {
            total += p * poly.volume();
            continue;
        }
        // The piece's own vertices are a subset of `part`; values follow
        // from the affine function.
        let tri = poly.triangulate();
        let grad = affine_from(pts, v);
        for s in &tri.simplices {
            let sp = tri.simplex_points(s);
            let vals: Vec<f64> = sp.iter().map(|x| grad(x)).collect();
            total += exp_affine_integral(&sp, &vals).unwrap_or(0.0);
        }
    }
    total
}

/// The affine function through `(pts[a], v[a])`.
fn affine_from(pts: &[&[f64]], v: &[f64]) -> impl Fn(&[f64]) -> f64 {
    let base: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
    let v = v.to_vec();
    move |x: &[f64]| {
        let refs: Vec<&[f64]> = base.iter().map(|p| p.as_slice()).collect();
        let l = crate::geometry::linalg::barycentric(&refs, x).unwrap();
        l.iter().zip(&v).map(|(a, b)| a * b).sum()
    }
}

pub fn truncate_renormalize(sol: &MleSolution, p_min: f64, region: &PolytopeV) -> Result<TruncatedDensity, MleError> {
    if !(p_min > 0.0) || !p_min.is_finite() {
        return Err(MleError::InvalidParameter("p_min must be positive".into()));
    }
    let t = &sol.density;
    let scale = t.support().vertices().iter().flat_map(|v| v.iter()).fold(1.0f64, |a, c| a.max(c.abs()));
    for v in t.support().vertices() {
        if !region.facets().iter().all(|f| crate::geometry::dot(&f.normal, v) <= f.offset + MEMBERSHIP_TOL * scale) {
            return Err(MleError::RegionTooSmall);
        }
    }
    let cells = t.cells();
    let mut inside = 0.0;
    let mut support_vol = 0.0;
    for s in &cells.simplices {
        let pts = cells.simplex_points(s);
        let v: Vec<f64> = s.vertex_indices.iter().map(|&i| t.heights()[i] - t.log_normalizer()).collect();
        inside += floored_integral(&pts, &v, p_min);
        support_vol += cells.simplex_volume(s);
    }
    let region_vol = region.volume();
    let outside = p_min * (region_vol - support_vol).max(0.0);
    let alpha = 1.0 / (inside + outside);
    Ok(TruncatedDensity {
        p_min,
        region: region.clone(),
        alpha,
        floor_mass: p_min * region_vol,
        base: t.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxValueReport {
    pub ln_ratio: f64,
    pub threshold: f64,
    pub violated: bool,
}

/// Compares `ln(M_fhat / p_min)` with `4 z`.
pub fn max_value_guard(sol: &MleSolution, p_min: f64, schedule: &ScheduleParams) -> MaxValueReport {
    let ln_ratio = sol.density.ln_max() - p_min.ln();
    let threshold = mle_max_threshold(schedule);
    MaxValueReport { ln_ratio, threshold, violated: ln_ratio >= threshold }
}

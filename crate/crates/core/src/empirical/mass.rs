//! Probability of regions under the true measure: closed forms where
//! available, a Monte Carlo reference sample otherwise.

use std::f64::consts::PI;

use rand::Rng;

use super::{Region, TrueMeasure};
use crate::densities::{divided_difference_exp, std_normal_cdf as phi, DensityModel};
use crate::geometry::{ConvexPolygon, Halfspace, Point};

/// `P(X in region)` and its standard error (0 for closed forms).
pub(crate) struct MassOracle<'a> {
    truth: TrueMeasure<'a>,
    reference: Vec<Point>,
}

impl<'a> MassOracle<'a> {
    pub fn new<R: Rng + ?Sized>(truth: TrueMeasure<'a>, reference_draws: usize, rng: &mut R) -> Self {
        let reference = truth.sample(rng, reference_draws);
        MassOracle { truth, reference }
    }

    /// Oracle that never falls back to sampling.
    pub fn exact_only(truth: TrueMeasure<'a>) -> Self {
        MassOracle { truth, reference: Vec::new() }
    }

    pub fn mass(&self, region: &Region) -> (f64, f64) {
        if let Some(p) = closed_form(&self.truth, region) {
            return (p, 0.0);
        }
        self.monte_carlo(region)
    }

    pub fn has_closed_form(&self, region: &Region) -> bool {
        closed_form(&self.truth, region).is_some()
    }

    fn monte_carlo(&self, region: &Region) -> (f64, f64) {
        let r = self.reference.len();
        if r == 0 {
            return (f64::NAN, f64::INFINITY);
        }
        let hits = self.reference.iter().filter(|x| region.contains(x)).count();
        let p = hits as f64 / r as f64;
        (p, (p * (1.0 - p) / r as f64).sqrt())
    }

    /// CDF along the line for one-dimensional truths.
    pub fn cdf_1d(&self, t: f64) -> Option<f64> {
        match self.truth {
            TrueMeasure::Density(f) => cdf_1d(f, t),
            TrueMeasure::UnitCircle => None,
        }
    }
}

fn cdf_1d(f: &DensityModel, t: f64) -> Option<f64> {
    if f.dim() != 1 {
        return None;
    }
    Some(match f {
        DensityModel::Gaussian(g) => phi((t - g.mean()[0]) / g.cov()[(0, 0)].sqrt()),
        DensityModel::ProductLaplace(l) => {
            let b = l.scales()[0];
            if t < 0.0 {
                0.5 * (t / b).exp()
            } else {
                1.0 - 0.5 * (-t / b).exp()
            }
        }
        DensityModel::UniformPolytope(u) => {
            let v = u.polytope().vertices();
            let (a, b) = (v[0][0].min(v[1][0]), v[0][0].max(v[1][0]));
            ((t - a) / (b - a)).clamp(0.0, 1.0)
        }
        DensityModel::Tent(tent) => {
            let cells = tent.cells();
            let mut acc = 0.0;
            for s in &cells.simplices {
                let a = cells.vertices[s.vertex_indices[0]][0];
                let b = cells.vertices[s.vertex_indices[1]][0];
                let (a, b) = (a.min(b), a.max(b));
                if t <= a {
                    continue;
                }
                let e = t.min(b);
                let (ya, ye) = (f.ln_pdf(&[a]), f.ln_pdf(&[e]));
                if e > a && ya.is_finite() && ye.is_finite() {
                    acc += (e - a) * divided_difference_exp(&[ya, ye]);
                }
            }
            acc.clamp(0.0, 1.0)
        }
    })
}

/// `P(n.x <= b)`.
fn halfspace_mass(truth: &TrueMeasure, h: &Halfspace) -> Option<f64> {
    let f = match truth {
        TrueMeasure::UnitCircle => {
            let s = h.offset / h.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            return Some(if s >= 1.0 {
                1.0
            } else if s <= -1.0 {
                0.0
            } else {
                1.0 - s.acos() / PI
            });
        }
        TrueMeasure::Density(f) => *f,
    };
    match f {
        DensityModel::Gaussian(g) => {
            let d = h.normal.len();
            let m: f64 = h.normal.iter().zip(g.mean()).map(|(a, b)| a * b).sum();
            let mut v = 0.0;
            for r in 0..d {
                for c in 0..d {
                    v += h.normal[r] * g.cov()[(r, c)] * h.normal[c];
                }
            }
            Some(phi((h.offset - m) / v.sqrt()))
        }
        _ if f.dim() == 1 => {
            let a = h.normal[0];
            let t = h.offset / a;
            let c = cdf_1d(f, t)?;
            Some(if a > 0.0 { c } else { 1.0 - c })
        }
        DensityModel::UniformPolytope(u) if f.dim() == 2 => {
            let poly = ConvexPolygon::from_polytope(u.polytope());
            Some(poly.clip(h).area() / poly.area())
        }
        _ => None,
    }
}

fn closed_form(truth: &TrueMeasure, region: &Region) -> Option<f64> {
    match region {
        Region::Empty => Some(0.0),
        Region::All => Some(1.0),
        Region::Halfspace(h) => halfspace_mass(truth, h),
        Region::Box { lo, hi } => {
            let TrueMeasure::Density(f) = truth else { return None };
            match f {
                _ if f.dim() == 1 => Some((cdf_1d(f, hi[0])? - cdf_1d(f, lo[0])?).max(0.0)),
                DensityModel::Gaussian(g) => {
                    let d = lo.len();
                    let diagonal = (0..d).all(|r| (0..d).all(|c| r == c || g.cov()[(r, c)] == 0.0));
                    if !diagonal {
                        return None;
                    }
                    let mut p = 1.0;
                    for k in 0..d {
                        let (m, s) = (g.mean()[k], g.cov()[(k, k)].sqrt());
                        p *= phi((hi[k] - m) / s) - phi((lo[k] - m) / s);
                    }
                    Some(p)
                }
                _ => None,
            }
        }
        Region::Polygon(poly) => {
            let TrueMeasure::Density(f) = truth else { return Some(circle_polygon_mass(poly)) };
            match f {
                DensityModel::Gaussian(g) => {
                    // Whiten, then integrate the standard Gaussian.
                    let l = g.chol();
                    let (m0, m1) = (g.mean()[0], g.mean()[1]);
                    let verts: Vec<[f64; 2]> = poly
                        .vertices()
                        .iter()
                        .map(|v| {
                            let z0 = (v[0] - m0) / l[(0, 0)];
                            let z1 = (v[1] - m1 - l[(1, 0)] * z0) / l[(1, 1)];
                            [z0, z1]
                        })
                        .collect();
                    Some(standard_gaussian_polygon_mass(&verts).clamp(0.0, 1.0))
                }
                DensityModel::UniformPolytope(u) if u.polytope().dim() == 2 => {
                    let support = ConvexPolygon::from_polytope(u.polytope());
                    let hs = poly.halfspaces();
                    Some(support.clip_all(&hs).area() / support.area())
                }
                _ => None,
            }
        }
        Region::Polytope(_) | Region::Union(_) => None,
    }
}

/// Arc-length fraction of the unit circle inside a polygon. Each edge cuts
/// away the arc on its outer side between the points where its line meets
/// the circle.
fn circle_polygon_mass(poly: &ConvexPolygon) -> f64 {
    let v = poly.vertices();
    if v.len() < 3 || poly.area() <= 0.0 {
        return 0.0;
    }
    let tau = 2.0 * PI;
    let signed: f64 = (0..v.len()).map(|i| cross(v[i], v[(i + 1) % v.len()])).sum();
    let mut arcs: Vec<(f64, f64)> = Vec::new();
    for i in 0..v.len() {
        let (mut a, mut b) = (v[i], v[(i + 1) % v.len()]);
        if signed < 0.0 {
            std::mem::swap(&mut a, &mut b);
        }
        let e = [b[0] - a[0], b[1] - a[1]];
        let ee = e[0] * e[0] + e[1] * e[1];
        let ae = a[0] * e[0] + a[1] * e[1];
        let disc = ae * ae - ee * (a[0] * a[0] + a[1] * a[1] - 1.0);
        if disc <= 0.0 {
            // The line misses the circle; the origin side decides.
            if cross(a, b) < 0.0 {
                return 0.0;
            }
            continue;
        }
        let r = disc.sqrt();
        let (t1, t2) = ((-ae - r) / ee, (-ae + r) / ee);
        let angle = |t: f64| (a[1] + t * e[1]).atan2(a[0] + t * e[0]).rem_euclid(tau);
        let start = angle(t1);
        let end = start + (angle(t2) - start).rem_euclid(tau);
        if end > tau {
            arcs.push((start, tau));
            arcs.push((0.0, end - tau));
        } else {
            arcs.push((start, end));
        }
    }
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut covered, mut reach) = (0.0, 0.0f64);
    for (a, b) in arcs {
        if b > reach {
            covered += b - a.max(reach);
            reach = b;
        }
    }
    ((tau - covered) / tau).clamp(0.0, 1.0)
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Standard bivariate Gaussian mass of a polygon, as a signed sum over the
/// fan of triangles from the origin. Each triangle is a one-dimensional
/// integral over the angle.
pub(crate) fn standard_gaussian_polygon_mass(verts: &[[f64; 2]]) -> f64 {
    let m = verts.len();
    if m < 3 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..m {
        let (a, b) = (verts[i], verts[(i + 1) % m]);
        let cr = a[0] * b[1] - a[1] * b[0];
        if cr.abs() < 1e-300 {
            continue;
        }
        let dt = cr.atan2(a[0] * b[0] + a[1] * b[1]);
        let ta = a[1].atan2(a[0]);
        let e = [b[0] - a[0], b[1] - a[1]];
        let g = |s: f64| {
            let t = ta + s * dt;
            let den = t.cos() * e[1] - t.sin() * e[0];
            let r = cr / den;
            -(-0.5 * r * r).exp_m1()
        };
        total += dt / (2.0 * PI) * adaptive_simpson(&g, 0.0, 1.0, 1e-13, 40);
    }
    total
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || (depth < 36 && diff.abs() <= 15.0 * tol) {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

//! Integral of `exp` of an affine function over a simplex.
//!
//! For a d-simplex `s` with vertex values `v_0..v_d` the integral of the
//! exponentiated affine interpolant is `d! vol(s) exp[v_0, ..., v_d]`, where
//! `exp[...]` is the divided difference of `exp` on those nodes. Derivatives
//! with respect to the vertex values are divided differences with repeated
//! nodes:
//!
//! ```text
//! d/dv_a   exp[v]        = exp[v, v_a]
//! d2/dv_a dv_b exp[v]    = (1 + [a == b]) exp[v, v_a, v_b]
//! ```

use super::DensityError;
use crate::geometry::linalg::{factorial, simplex_det};

/// Blocks of nodes narrower than this are summed by Taylor series.
pub const SERIES_SPREAD: f64 = 1e-4;

const MAX_TERMS: usize = 40;
const MAX_NODES: usize = 12;

/// `exp[x_0, ..., x_m]` for `m + 1 <= 12` nodes in any order.
pub fn divided_difference_exp(nodes: &[f64]) -> f64 {
    assert!(!nodes.is_empty() && nodes.len() <= MAX_NODES, "1..=12 nodes");
    let mut x = [0.0; MAX_NODES];
    let m = nodes.len();
    x[..m].copy_from_slice(nodes);
    let x = &mut x[..m];
    x.sort_unstable_by(f64::total_cmp);
    if x[m - 1] - x[0] < SERIES_SPREAD {
        return series(x);
    }
    // table[i] holds exp[x_i .. x_{i+len-1}] for the current block length.
    let mut table = [0.0; MAX_NODES];
    for (i, t) in table[..m].iter_mut().enumerate() {
        *t = x[i].exp();
    }
    for len in 2..=m {
        for i in 0..=m - len {
            let j = i + len - 1;
            let w = x[j] - x[i];
            table[i] = if w < SERIES_SPREAD { series(&x[i..=j]) } else { (table[i + 1] - table[i]) / w };
        }
    }
    table[0]
}

/// `e^c sum_k h_k(x - c) / (m + k)!` around the midpoint `c`.
fn series(x: &[f64]) -> f64 {
    let m = x.len() - 1;
    let c = 0.5 * (x[0] + x[m]);
    // h[k] = complete homogeneous symmetric polynomial of degree k.
    let r = x.iter().fold(0.0f64, |a, &xi| a.max((xi - c).abs()));
    let mut h = [0.0; MAX_TERMS];
    h[0] = 1.0;
    for &xi in x {
        let t = xi - c;
        for k in 1..MAX_TERMS {
            h[k] += t * h[k - 1];
        }
    }
    let mut fact = factorial(m);
    let mut sum = 0.0;
    // |h_k| / (m+k)! <= r^k / (k! m!), which bounds the tail.
    let mut bound = 1.0;
    for (k, hk) in h.iter().enumerate() {
        if k > 0 {
            fact *= (m + k) as f64;
            bound *= r / k as f64;
        }
        sum += hk / fact;
        if bound < 1e-18 {
            break;
        }
    }
    c.exp() * sum
}

/// `∫_s exp(affine interpolant of values)` over the simplex with vertices
/// `pts` (d+1 points of R^d).
pub fn exp_affine_integral(pts: &[&[f64]], values: &[f64]) -> Result<f64, DensityError> {
    let d = pts.len().checked_sub(1).ok_or(DensityError::DegenerateSimplex)?;
    if values.len() != d + 1 || pts.iter().any(|p| p.len() != d) {
        return Err(DensityError::DimensionMismatch { expected: d + 1, got: values.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DensityError::NonFinite);
    }
    let det = simplex_det(pts).abs();
    let scale = pts.iter().flat_map(|p| p.iter()).fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    if !(det > 1e-14 * scale.powi(d as i32)) {
        return Err(DensityError::DegenerateSimplex);
    }
    Ok(det * divided_difference_exp(values))
}

/// Integral, gradient and Hessian (row-major) of `det * exp[v]` in `v`,
/// where `det = d! vol`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTerms {
    pub integral: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

pub fn cell_terms(det: f64, v: &[f64], with_hessian: bool) -> CellTerms {
    let k = v.len();
    let mut nodes = [0.0; MAX_NODES];
    nodes[..k].copy_from_slice(v);
    let integral = det * divided_difference_exp(v);
    let mut grad = vec![0.0; k];
    for a in 0..k {
        nodes[k] = v[a];
        grad[a] = det * divided_difference_exp(&nodes[..k + 1]);
    }
    let mut hess = Vec::new();
    if with_hessian {
        hess = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                nodes[k] = v[a];
                nodes[k + 1] = v[b];
                let mut h = det * divided_difference_exp(&nodes[..k + 2]);
                if a == b {
                    h *= 2.0;
                }
                hess[a * k + b] = h;
                hess[b * k + a] = h;
            }
        }
    }
    CellTerms { integral, grad, hess }
}

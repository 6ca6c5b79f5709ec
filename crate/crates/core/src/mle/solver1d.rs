//! Active-set solver on the line.
//!
//! The log-density is piecewise linear with knots at a subset of the
//! samples. For a fixed knot set the surrogate is smooth and strictly convex
//! in the knot heights, with a tridiagonal Hessian. The iterate moves toward
//! the optimum for its knot set until a kink would turn convex, drops knots
//! that became straight, and adds the sample whose tent direction decreases
//! the surrogate fastest.

use super::solver::SolverOutput;
use super::{MleError, SolverOptions};
use crate::densities::{cell_terms, divided_difference_exp};
use crate::geometry::Point;

struct Line {
    /// Sorted coordinates and their weights.
    x: Vec<f64>,
    w: Vec<f64>,
    /// Prefix sums of `w` and `w * x`.
    cw: Vec<f64>,
    cwx: Vec<f64>,
}

impl Line {
    fn new(x: Vec<f64>, w: Vec<f64>) -> Line {
        let mut cw = vec![0.0; x.len() + 1];
        let mut cwx = vec![0.0; x.len() + 1];
        for i in 0..x.len() {
            cw[i + 1] = cw[i] + w[i];
            cwx[i + 1] = cwx[i] + w[i] * x[i];
        }
        Line { x, w, cw, cwx }
    }

    /// `sum w_i (x_i - a)` and `sum w_i (b - x_i)` over sorted indices `lo..hi`.
    fn moments(&self, lo: usize, hi: usize, a: f64, b: f64) -> (f64, f64) {
        let sw = self.cw[hi] - self.cw[lo];
        let swx = self.cwx[hi] - self.cwx[lo];
        (swx - a * sw, b * sw - swx)
    }

    /// Weight pulled onto each knot by linear interpolation.
    fn knot_weights(&self, knots: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; knots.len()];
        out[0] += self.w[knots[0]];
        for k in 0..knots.len() - 1 {
            let (l, r) = (knots[k], knots[k + 1]);
            let (a, b) = (self.x[l], self.x[r]);
            let (ma, mb) = self.moments(l + 1, r, a, b);
            out[k] += mb / (b - a);
            out[k + 1] += ma / (b - a) + self.w[r];
        }
        out
    }

    fn sigma(&self, knots: &[usize], wk: &[f64], y: &[f64]) -> f64 {
        let mut s = -wk.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        for k in 0..knots.len() - 1 {
            s += (self.x[knots[k + 1]] - self.x[knots[k]]) * divided_difference_exp(&[y[k], y[k + 1]]);
        }
        s
    }

    /// Gradient and tridiagonal Hessian (diagonal, super-diagonal).
    fn newton(&self, knots: &[usize], wk: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = knots.len();
        let mut g: Vec<f64> = wk.iter().map(|v| -v).collect();
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n.saturating_sub(1)];
        for k in 0..n - 1 {
            let t = cell_terms(self.x[knots[k + 1]] - self.x[knots[k]], &[y[k], y[k + 1]], true);
            g[k] += t.grad[0];
            g[k + 1] += t.grad[1];
            diag[k] += t.hess[0];
            diag[k + 1] += t.hess[3];
            sup[k] += t.hess[1];
        }
        (g, diag, sup)
    }

    fn kinks(&self, knots: &[usize], y: &[f64]) -> Vec<f64> {
        let slope = |k: usize| (y[k + 1] - y[k]) / (self.x[knots[k + 1]] - self.x[knots[k]]);
        (1..knots.len() - 1).map(|k| slope(k - 1) - slope(k)).collect()
    }
}

/// Solves the symmetric tridiagonal system by elimination without pivoting
/// (the matrix is positive definite).
fn tridiagonal(diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut m = diag[0];
    c[0] = if n > 1 { sup[0] / m } else { 0.0 };
    d[0] = rhs[0] / m;
    for i in 1..n {
        m = diag[i] - sup[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / m;
        }
        d[i] = (rhs[i] - sup[i - 1] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Minimiser of the surrogate for a fixed knot set, started from `y`.
fn knot_optimum(line: &Line, knots: &[usize], y: &[f64]) -> (Vec<f64>, f64) {
    let wk = line.knot_weights(knots);
    let mut y = y.to_vec();
    let mut s = line.sigma(knots, &wk, &y);
    for _ in 0..100 {
        let (g, diag, sup) = line.newton(knots, &wk, &y);
        let p: Vec<f64> = tridiagonal(&diag, &sup, &g).iter().map(|v| -v).collect();
        let slope: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
        if -slope < 1e-28 {
            break;
        }
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-10 {
            let yt: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
            let st = line.sigma(knots, &wk, &yt);
            if st <= s + 1e-4 * alpha * slope {
                y = yt;
                s = st;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let (g, _, _) = line.newton(knots, &wk, &y);
    (y, g.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Derivative of the surrogate when sample `j` (strictly between knots
/// `l` and `r`) is raised as the apex of a tent over `[x_l, x_r]`.
fn tent_slope(line: &Line, l: usize, r: usize, j: usize, yl: f64, yr: f64) -> f64 {
    let (a, b, c) = (line.x[l], line.x[r], line.x[j]);
    let yc = yl + (yr - yl) * (c - a) / (b - a);
    let (left, _) = line.moments(l + 1, j, a, c);
    let (_, right) = line.moments(j + 1, r, c, b);
    let mass = left / (c - a) + line.w[j] + right / (b - c);
    let up = (c - a) * divided_difference_exp(&[yl, yc, yc]) + (b - c) * divided_difference_exp(&[yc, yc, yr]);
    up - mass
}

pub(crate) fn solve_1d(points: &[Point], w: &[f64], opts: &SolverOptions) -> Result<SolverOutput, MleError> {
    let m = points.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    let line = Line::new(order.iter().map(|&i| points[i][0]).collect(), order.iter().map(|&i| w[i]).collect());

    let span = line.x[m - 1] - line.x[0];
    let mut knots = vec![0, m - 1];
    let (mut y, mut gnorm) = knot_optimum(&line, &knots, &[-span.ln(), -span.ln()]);
    let mut iterations = 0;
    let mut residual;
    let mut note = "max-iterations";
    let mut converged = false;
    let mut history: Vec<f64> = Vec::new();
    let mut tabu: Option<usize> = None;

    loop {
        // Best insertion per gap between knots.
        let mut best: Option<(f64, usize, usize)> = None;
        let mut neg_sq = 0.0;
        for k in 0..knots.len() - 1 {
            let (l, r) = (knots[k], knots[k + 1]);
            for j in l + 1..r {
                if line.x[j] <= line.x[l] || line.x[j] >= line.x[r] {
                    continue;
                }
                let s = tent_slope(&line, l, r, j, y[k], y[k + 1]);
                if s < 0.0 {
                    neg_sq += s * s;
                    if Some(j) != tabu && best.is_none_or(|b| s < b.0) {
                        best = Some((s, k, j));
                    }
                }
            }
        }
        residual = (gnorm * gnorm + neg_sq).sqrt();
        if residual < opts.tolerance {
            converged = true;
            note = "converged";
            break;
        }
        let Some((_, k, j)) = best else {
            note = "stagnated";
            break;
        };
        if iterations >= opts.max_iterations {
            break;
        }
        let wk = line.knot_weights(&knots);
        let sigma = line.sigma(&knots, &wk, &y);
        history.push(sigma);
        let win = opts.stagnation_window;
        if history.len() > win && (history[history.len() - 1 - win] - sigma).abs() <= opts.stagnation_rel * sigma.abs().max(1.0) {
            note = "stagnated";
            break;
        }
        iterations += 1;

        let (a, b, c) = (line.x[knots[k]], line.x[knots[k + 1]], line.x[j]);
        knots.insert(k + 1, j);
        y.insert(k + 1, y[k] + (y[k + 1] - y[k]) * (c - a) / (b - a));
        tabu = None;
        for _ in 0..knots.len() + 2 {
            let (target, g) = knot_optimum(&line, &knots, &y);
            let before = line.kinks(&knots, &y);
            let after = line.kinks(&knots, &target);
            let mut t = 1.0f64;
            let mut block = None;
            for (i, (&k0, &k1)) in before.iter().zip(&after).enumerate() {
                if k1 < 0.0 {
                    let ti = (k0.max(0.0) / (k0 - k1)).min(1.0);
                    if ti < t {
                        t = ti;
                        block = Some(i + 1);
                    }
                }
            }
            y.iter_mut().zip(&target).for_each(|(a, b)| *a += t * (b - *a));
            gnorm = g;
            let Some(blocked) = block else { break };
            let kinks = line.kinks(&knots, &y);
            let scale = y.iter().fold(1.0f64, |a, v| a.max(v.abs())) / span;
            let mut keep: Vec<bool> = std::iter::once(true)
                .chain(kinks.iter().map(|&kk| kk > 1e-12 * scale))
                .chain(std::iter::once(true))
                .collect();
            keep[blocked] = false;
            if knots[blocked] == j && t == 0.0 {
                tabu = Some(j);
            }
            let mut idx = 0;
            knots.retain(|_| {
                idx += 1;
                keep[idx - 1]
            });
            let mut idx = 0;
            y.retain(|_| {
                idx += 1;
                keep[idx - 1]
            });
            let (g, _, _) = line.newton(&knots, &line.knot_weights(&knots), &y);
            gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
    }

    // Heights at every sample, then exact unit mass.
    let mut sorted = vec![0.0; m];
    for k in 0..knots.len() - 1 {
        let (l, r) = (knots[k], knots[k + 1]);
        for (j, s) in sorted.iter_mut().enumerate().take(r + 1).skip(l) {
            *s = y[k] + (y[k + 1] - y[k]) * (line.x[j] - line.x[l]) / (line.x[r] - line.x[l]);
        }
    }
    let wk = line.knot_weights(&knots);
    let mass = line.sigma(&knots, &vec![0.0; knots.len()], &y);
    let shift = mass.ln();
    let mut heights = vec![0.0; m];
    for (s, &i) in sorted.iter().zip(&order) {
        heights[i] = s - shift;
    }
    y.iter_mut().for_each(|v| *v -= shift);
    let sigma = line.sigma(&knots, &wk, &y);
    let cells = knots.windows(2).map(|p| vec![order[p[0]], order[p[1]]]).collect();
    Ok(SolverOutput { heights, cells, sigma, residual, iterations, converged, note })
}

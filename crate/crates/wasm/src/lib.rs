//! Browser bindings behind `www/index.html`: draw a sample, fit the MLE in
//! one or two dimensions, and tabulate the sample-size bounds.

use logconcave::bounds::sample_bounds;
use logconcave::harness::DensitySpec;
use logconcave::rng::stream;
use logconcave::{fit_mle, DensityModel, MleSolution, Point, SolverOptions};
use wasm_bindgen::prelude::*;

fn model(spec: &str, d: usize) -> Result<DensityModel, String> {
    let ds: DensitySpec = spec.parse()?;
    if matches!(ds, DensitySpec::TentFile(_)) {
        return Err("tent files are not available in the browser".into());
    }
    ds.build(d).map_err(|e| e.to_string())
}

fn fit(points: Vec<Point>) -> Result<MleSolution, String> {
    fit_mle(&points, &SolverOptions::default()).map_err(|e| e.to_string())
}

/// `n` draws from `density` in dimension `d`, coordinates flattened.
pub fn sample_flat(density: &str, d: usize, n: usize, seed: u64) -> Result<Vec<f64>, String> {
    let f = model(density, d)?;
    Ok(f.sample(&mut stream(seed, 0), n).iter().flat_map(|p| p.iter().copied()).collect())
}

/// Fits `xs` and returns `[x, fhat(x), f0(x)]` triples on `grid` points
/// spanning the data with a margin.
pub fn fit_1d_curve(xs: &[f64], truth: &str, grid: usize) -> Result<Vec<f64>, String> {
    let sol = fit(xs.iter().map(|&x| Point::from([x])).collect())?;
    let f0 = model(truth, 1)?;
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let pad = 0.15 * (hi - lo).max(1e-9);
    let grid = grid.max(2);
    let mut out = Vec::with_capacity(3 * grid);
    for i in 0..grid {
        let x = lo - pad + (hi - lo + 2.0 * pad) * i as f64 / (grid - 1) as f64;
        out.extend([x, sol.density.ln_pdf(&[x]).exp(), f0.pdf(&[x])]);
    }
    Ok(out)
}

/// Fits planar points given as `[x0, y0, x1, y1, ...]`; returns each cell
/// as three `(x, y, fhat)` vertices.
pub fn fit_2d_cells(xy: &[f64]) -> Result<Vec<f64>, String> {
    if xy.len() % 2 != 0 {
        return Err("odd number of coordinates".into());
    }
    let sol = fit(xy.chunks(2).map(Point::from).collect())?;
    let t = &sol.density;
    let mut out = Vec::with_capacity(9 * t.cells().simplices.len());
    for s in &t.cells().simplices {
        for &i in &s.vertex_indices {
            let p = &t.base_points()[i];
            out.extend([p[0], p[1], t.ln_pdf(p).exp()]);
        }
    }
    Ok(out)
}

/// `quantity,value` lines of the sample-size report.
pub fn bounds_text(d: usize, eps: f64, tau: f64) -> Result<String, String> {
    let r = sample_bounds(d, eps, tau).map_err(|e| e.to_string())?;
    let rows = [
        ("N1", r.n1.to_string()),
        ("N2", r.n2.to_string()),
        ("rate exponent (d+3)/2", r.rate_exponent.to_string()),
        ("minimax lower bound (external)", format!("{:.4e}", r.lower_bound)),
        ("facets at N1", r.facets.to_string()),
        ("levels at N1", r.levels.to_string()),
        ("VC polytopes (log2)", r.vc.polytope_bound.to_string()),
        ("VC polytopes (ln)", r.vc.polytope_bound_ln.to_string()),
        ("VC combinations", r.vc.combo_bound.to_string()),
        ("MLE max threshold", format!("{:.6}", r.mle_max_threshold)),
    ];
    Ok(rows.iter().map(|(k, v)| format!("{k},{v}\n")).collect())
}

#[wasm_bindgen]
pub fn sample(density: &str, d: usize, n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    sample_flat(density, d, n, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fit_1d(xs: Vec<f64>, truth: &str, grid: usize) -> Result<Vec<f64>, JsError> {
    fit_1d_curve(&xs, truth, grid).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fit_2d(xy: Vec<f64>) -> Result<Vec<f64>, JsError> {
    fit_2d_cells(&xy).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bounds(d: usize, eps: f64, tau: f64) -> Result<String, JsError> {
    bounds_text(d, eps, tau).map_err(|e| JsError::new(&e))
}

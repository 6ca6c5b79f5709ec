//! Newton solver for the tent likelihood surrogate
//!
//! ```text
//! sigma(y) = -sum_i w_i y_i + ∫ exp(hbar_y)
//! ```
//!
//! Every sample is a vertex of the working triangulation. Samples on a flat
//! face sit on the affine surface and are held there by concavity
//! constraints across the flat ridges around them, so raising one of them is
//! an ordinary feasible direction. With the cells frozen `sigma` is smooth,
//! and each step solves the Newton model over the cone of heights that keep
//! the surface concave on the current cells. Flat faces are retriangulated
//! when a binding ridge blocks progress.

use std::collections::{BTreeMap, HashMap, HashSet};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, ZeroConeT};

use super::{MleError, SolverOptions};
use crate::densities::{cell_terms, divided_difference_exp, DensityModel, Gaussian};
use crate::geometry::hull::lifted_hull;
use crate::geometry::linalg::{barycentric, simplex_det};
use crate::geometry::{GeometryError, Point};

/// Ridges whose kink is below this (relative) count as flat.
const FLAT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub(crate) struct Mesh {
    pub cells: Vec<Vec<usize>>,
    pub dets: Vec<f64>,
}

/// Upper facets of the lifted hull of `verts`, as cells in global indices.
fn upper_cells(x: &[Point], verts: &[usize], heights: &[f64]) -> Result<Vec<Vec<usize>>, GeometryError> {
    let d = x[0].dim();
    let base: Vec<Point> = verts.iter().map(|&i| x[i].clone()).collect();
    let raw = lifted_hull(&base, heights)?;
    Ok(raw
        .facets
        .iter()
        .filter(|f| f.normal[d] > 1e-12 && f.vertices.iter().all(|&v| v < base.len()))
        .map(|f| f.vertices.iter().map(|&v| verts[v]).collect::<Vec<usize>>())
        .filter(|cell| volume(x, cell) > 0.0)
        .collect())
}

fn volume(x: &[Point], cell: &[usize]) -> f64 {
    let pts: Vec<&[f64]> = cell.iter().map(|&i| x[i].coords()).collect();
    simplex_det(&pts).abs()
}

/// Splits every cell containing point `p` at `p`.
fn insert_point(x: &[Point], cells: &mut Vec<Vec<usize>>, p: usize) {
    let mut out = Vec::with_capacity(cells.len() + x[0].dim() + 1);
    for cell in cells.drain(..) {
        let pts: Vec<&[f64]> = cell.iter().map(|&i| x[i].coords()).collect();
        let inside = barycentric(&pts, x[p].coords()).filter(|b| b.iter().all(|&l| l >= -1e-12));
        match inside {
            Some(b) => {
                for (a, &l) in b.iter().enumerate() {
                    if l > 1e-12 {
                        let mut sub = cell.clone();
                        sub[a] = p;
                        out.push(sub);
                    }
                }
            }
            None => out.push(cell),
        }
    }
    *cells = out;
}

/// Adds every point of `verts` that no cell uses, as a flat vertex.
fn complete(x: &[Point], cells: &mut Vec<Vec<usize>>, verts: &[usize]) {
    let used: HashSet<usize> = cells.iter().flatten().copied().collect();
    for &v in verts {
        if !used.contains(&v) {
            insert_point(x, cells, v);
        }
    }
}

impl Mesh {
    fn new(x: &[Point], cells: Vec<Vec<usize>>) -> Mesh {
        let dets = cells.iter().map(|c| volume(x, c)).collect();
        Mesh { cells, dets }
    }

    fn build(x: &[Point], y: &[f64]) -> Result<Mesh, GeometryError> {
        let all: Vec<usize> = (0..x.len()).collect();
        let mut cells = upper_cells(x, &all, y)?;
        complete(x, &mut cells, &all);
        Ok(Mesh::new(x, cells))
    }

    fn integral(&self, y: &[f64]) -> f64 {
        let mut vals = [0.0; 8];
        self.cells
            .iter()
            .zip(&self.dets)
            .map(|(c, det)| {
                for (k, &i) in c.iter().enumerate() {
                    vals[k] = y[i];
                }
                det * divided_difference_exp(&vals[..c.len()])
            })
            .sum()
    }

    fn sigma(&self, w: &[f64], y: &[f64]) -> f64 {
        -w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + self.integral(y)
    }

    fn ridges(&self, x: &[Point]) -> Vec<Ridge> {
        let mut open: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut out = Vec::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for a in 0..cell.len() {
                let mut key: Vec<usize> = cell.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &v)| v).collect();
                key.sort_unstable();
                match open.remove(&key) {
                    Some(c1) => {
                        // Express the far vertex of the smaller-extrapolation side.
                        let q1 = self.cells[c1].iter().copied().find(|v| !cell.contains(v));
                        let sides = [(c1, c, cell[a]), (c, c1, q1.unwrap_or(cell[a]))];
                        let best = sides
                            .iter()
                            .filter_map(|&(c, c2, q)| {
                                let pts: Vec<&[f64]> = self.cells[c].iter().map(|&i| x[i].coords()).collect();
                                barycentric(&pts, x[q].coords()).map(|beta| Ridge { c, c2, q, beta })
                            })
                            .min_by(|r, s| r.weight().total_cmp(&s.weight()));
                        out.extend(best);
                    }
                    None => {
                        open.insert(key, c);
                    }
                }
            }
        }
        out
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn canonical(cells: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = cells
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort_unstable();
            c
        })
        .collect();
    out.sort_unstable();
    out
}

/// Interior facet shared by cells `c` and `c2`; `q` is the vertex of `c2`
/// opposite the facet and `beta` its barycentric coordinates in `c`.
struct Ridge {
    c: usize,
    c2: usize,
    q: usize,
    beta: Vec<f64>,
}

impl Ridge {
    /// Height of the plane of `c` above `q`; nonnegative where the surface
    /// is concave across the ridge.
    fn kink(&self, mesh: &Mesh, y: &[f64]) -> f64 {
        mesh.cells[self.c].iter().zip(&self.beta).map(|(&v, b)| b * y[v]).sum::<f64>() - y[self.q]
    }

    fn weight(&self) -> f64 {
        1.0 + self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

/// Gradient and Hessian of `sigma` with frozen cells. The Hessian comes as
/// upper-triangular triplets.
struct Newton {
    g: Vec<f64>,
    h: Vec<(usize, usize, f64)>,
}

impl Newton {
    fn new(mesh: &Mesh, w: &[f64], y: &[f64]) -> Newton {
        let mut g: Vec<f64> = w.iter().map(|v| -v).collect();
        let mut h = Vec::with_capacity(mesh.cells.len() * 10);
        let mut vals = [0.0; 8];
        for (cell, &det) in mesh.cells.iter().zip(&mesh.dets) {
            let k = cell.len();
            for (a, &v) in cell.iter().enumerate() {
                vals[a] = y[v];
            }
            let t = cell_terms(det, &vals[..k], true);
            for a in 0..k {
                g[cell[a]] += t.grad[a];
                for b in 0..k {
                    let (i, j) = (cell[a], cell[b]);
                    if i <= j {
                        h.push((i, j, t.hess[a * k + b]));
                    }
                }
            }
        }
        Newton { g, h }
    }

    fn quad(&self, p: &[f64]) -> f64 {
        self.h.iter().map(|&(i, j, v)| if i == j { v * p[i] * p[i] } else { 2.0 * v * p[i] * p[j] }).sum()
    }

    fn slope(&self, p: &[f64]) -> f64 {
        self.g.iter().zip(p).map(|(a, b)| a * b).sum()
    }
}

type Row = (Vec<(usize, f64)>, f64);

/// Solves `min g.p + p.H.p/2` subject to `a_r.p >= -b_r`. Returns the step
/// and the constraint multipliers.
fn cone_qp(g: &[f64], h: &[(usize, usize, f64)], rows: &[&Row]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = g.len();
    let p_mat = CscMatrix::new_from_triplets(
        n,
        n,
        h.iter().map(|e| e.0).collect(),
        h.iter().map(|e| e.1).collect(),
        h.iter().map(|e| e.2).collect(),
    );
    let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::with_capacity(rows.len());
    for (r, (a, rhs)) in rows.iter().enumerate() {
        for &(j, v) in a {
            ai.push(r);
            aj.push(j);
            av.push(-v);
        }
        b.push(*rhs);
    }
    let a_mat = CscMatrix::new_from_triplets(rows.len(), n, ai, aj, av);
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-12)
        .tol_gap_rel(1e-12)
        .tol_feas(1e-12)
        .max_iter(200)
        .build()
        .ok()?;
    let cones = [NonnegativeConeT(rows.len())];
    let mut solver = DefaultSolver::new(&p_mat, g, &a_mat, &b, &cones, settings).ok()?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        _ => return None,
    }
    Some((solver.solution.x.clone(), solver.solution.z.clone()))
}

/// Unit constraint rows of the ridges, normalised kinks at `y`, and which
/// ridges are flat.
fn ridge_rows(mesh: &Mesh, ridges: &[Ridge], y: &[f64]) -> (Vec<Row>, Vec<bool>) {
    let scale = y.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut flat = Vec::with_capacity(ridges.len());
    let rows = ridges
        .iter()
        .map(|ridge| {
            let mut a: Vec<(usize, f64)> = mesh.cells[ridge.c].iter().zip(&ridge.beta).map(|(&v, &b)| (v, b)).collect();
            a.push((ridge.q, -1.0));
            let nrm = a.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            a.iter_mut().for_each(|e| e.1 /= nrm);
            let k = ridge.kink(mesh, y);
            flat.push(k <= FLAT_TOL * scale * ridge.weight());
            (a, k / nrm)
        })
        .collect();
    (rows, flat)
}

/// Norm of `g - A^T lambda` over the flat ridges, with negative multipliers
/// clipped. Bounds the distance from `g` to the cone the flat ridges span.
fn kkt_residual(g: &[f64], flat: &[bool], rows: &[Row], lambda: &[f64]) -> f64 {
    let mut r = g.to_vec();
    for ((row, f), l) in rows.iter().zip(flat).zip(lambda) {
        if *f && *l > 0.0 {
            for &(j, a) in &row.0 {
                r[j] -= l * a;
            }
        }
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A union of cells joined by flat ridges, on which the surface is affine.
struct Face {
    cells: Vec<usize>,
    pts: Vec<usize>,
    vol: f64,
}

/// Faces with more than one cell, and the cells outside them.
fn faces(mesh: &Mesh, ridges: &[Ridge], flat: &[bool]) -> (Vec<Face>, Vec<usize>) {
    let mut parent: Vec<usize> = (0..mesh.cells.len()).collect();
    for (r, f) in ridges.iter().zip(flat) {
        if *f {
            let (a, b) = (find(&mut parent, r.c), find(&mut parent, r.c2));
            parent[a] = b;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 0..mesh.cells.len() {
        groups.entry(find(&mut parent, c)).or_default().push(c);
    }
    let mut out = Vec::new();
    let mut single = Vec::new();
    for cells in groups.into_values() {
        if cells.len() == 1 {
            single.push(cells[0]);
            continue;
        }
        let mut pts: Vec<usize> = cells.iter().flat_map(|&c| mesh.cells[c].iter().copied()).collect();
        pts.sort_unstable();
        pts.dedup();
        let vol = cells.iter().map(|&c| mesh.dets[c]).sum();
        out.push(Face { cells, pts, vol });
    }
    (out, single)
}

/// Triangulation of a face induced by lifting its points to `heights`, or
/// `None` when it does not tile the face.
fn lifted_cells(x: &[Point], face: &Face, heights: &[f64], all_points: bool) -> Option<Vec<Vec<usize>>> {
    let mut h: Vec<f64> = face.pts.iter().map(|&p| heights[p]).collect();
    // Only the shape of the lift matters; keep it well above hull tolerances.
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    let spread = h.iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
    if spread > 0.0 {
        h.iter_mut().for_each(|v| *v = (*v - mean) / spread);
    }
    let mut cells = upper_cells(x, &face.pts, &h).ok()?;
    if all_points {
        complete(x, &mut cells, &face.pts);
    }
    let vol: f64 = cells.iter().map(|c| volume(x, c)).sum();
    ((vol - face.vol).abs() <= 1e-9 * face.vol).then_some(cells)
}

/// Gradient of `∫ exp` over `cells` in the heights of their vertices.
fn cell_gradient(x: &[Point], cells: &[Vec<usize>], y: &[f64]) -> Vec<(usize, f64)> {
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let mut vals = [0.0; 8];
    for cell in cells {
        for (k, &i) in cell.iter().enumerate() {
            vals[k] = y[i];
        }
        let t = cell_terms(volume(x, cell), &vals[..cell.len()], false);
        for (&i, g) in cell.iter().zip(&t.grad) {
            *acc.entry(i).or_insert(0.0) += g;
        }
    }
    acc.into_iter().collect()
}

/// Shortest `c + sum_i alpha_i v_i` with `alpha` on a simplex per group.
fn min_norm(c: &[f64], atoms: &[(usize, Vec<(usize, f64)>)], groups: usize) -> Option<Vec<f64>> {
    let m = c.len();
    let n = atoms.len();
    let p_mat = CscMatrix::new_from_triplets(m + n, m + n, (0..m).collect(), (0..m).collect(), vec![1.0; m]);
    let q = vec![0.0; m + n];
    let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..m {
        ai.push(i);
        aj.push(i);
        av.push(1.0);
    }
    for (k, (g, v)) in atoms.iter().enumerate() {
        for &(i, val) in v {
            ai.push(i);
            aj.push(m + k);
            av.push(-val);
        }
        ai.push(m + g);
        aj.push(m + k);
        av.push(1.0);
        ai.push(m + groups + k);
        aj.push(m + k);
        av.push(-1.0);
    }
    let a_mat = CscMatrix::new_from_triplets(m + groups + n, m + n, ai, aj, av);
    let mut b = c.to_vec();
    b.extend(std::iter::repeat_n(1.0, groups));
    b.extend(std::iter::repeat_n(0.0, n));
    let cones = [ZeroConeT(m + groups), NonnegativeConeT(n)];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-15)
        .tol_gap_rel(1e-12)
        .tol_feas(1e-12)
        .max_iter(200)
        .build()
        .ok()?;
    let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings).ok()?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        _ => return None,
    }
    // Project back onto the simplices so the result is a genuine subgradient.
    let mut alpha: Vec<f64> = solver.solution.x[m..].iter().map(|a| a.max(0.0)).collect();
    let mut sums = vec![0.0; groups];
    for ((g, _), a) in atoms.iter().zip(&alpha) {
        sums[*g] += a;
    }
    for ((g, _), a) in atoms.iter().zip(alpha.iter_mut()) {
        *a /= sums[*g];
    }
    Some(alpha)
}

struct Steepest {
    /// Norm of the shortest subgradient found.
    norm: f64,
    /// Cells of the triangulation induced by the descent direction.
    cells: Option<Vec<Vec<usize>>>,
}

/// Shortest subgradient of `sigma` at `y`. On a flat face the integral term
/// has as subgradients the convex hull of the gradients of all its
/// triangulations; the hull is explored by lifting the face points along the
/// current candidate (fully corrective Frank-Wolfe).
fn steepest(x: &[Point], w: &[f64], y: &[f64], mesh: &Mesh, ridges: &[Ridge], flat: &[bool], tol: f64) -> Steepest {
    let (faces, single) = faces(mesh, ridges, flat);
    let mut c: Vec<f64> = w.iter().map(|v| -v).collect();
    let lone: Vec<Vec<usize>> = single.iter().map(|&k| mesh.cells[k].clone()).collect();
    for (i, g) in cell_gradient(x, &lone, y) {
        c[i] += g;
    }
    let mut atoms: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    let mut seen: HashSet<Vec<Vec<usize>>> = HashSet::new();
    for (k, face) in faces.iter().enumerate() {
        let cells: Vec<Vec<usize>> = face.cells.iter().map(|&i| mesh.cells[i].clone()).collect();
        seen.insert(canonical(&cells));
        atoms.push((k, cell_gradient(x, &cells, y)));
    }
    let mut norm = f64::INFINITY;
    let mut s = c.clone();
    for _ in 0..60 {
        let Some(alpha) = min_norm(&c, &atoms, faces.len()) else { break };
        s.clone_from(&c);
        for ((_, v), a) in atoms.iter().zip(&alpha) {
            for &(i, val) in v {
                s[i] += a * val;
            }
        }
        norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < tol {
            return Steepest { norm, cells: None };
        }
        // Linear oracle: min over subgradients of <v, s>.
        let down: Vec<f64> = s.iter().map(|v| -v).collect();
        let mut lin: f64 = c.iter().zip(&s).map(|(a, b)| a * b).sum();
        let mut fresh = Vec::new();
        for (k, face) in faces.iter().enumerate() {
            let cells = lifted_cells(x, face, &down, false)
                .unwrap_or_else(|| face.cells.iter().map(|&i| mesh.cells[i].clone()).collect());
            let v = cell_gradient(x, &cells, y);
            lin += v.iter().map(|&(i, val)| val * s[i]).sum::<f64>();
            if seen.insert(canonical(&cells)) {
                fresh.push((k, v));
            }
        }
        if lin >= 0.5 * norm * norm || fresh.is_empty() {
            break;
        }
        atoms.extend(fresh);
    }
    // Triangulation on which the direction -s is concave.
    let down: Vec<f64> = s.iter().map(|v| -v).collect();
    let mut cells: Vec<Vec<usize>> = Vec::with_capacity(mesh.cells.len());
    let mut in_face = vec![false; mesh.cells.len()];
    for face in &faces {
        for &i in &face.cells {
            in_face[i] = true;
        }
        match lifted_cells(x, face, &down, true) {
            Some(f) => cells.extend(f),
            None => cells.extend(face.cells.iter().map(|&i| mesh.cells[i].clone())),
        }
    }
    cells.extend(mesh.cells.iter().zip(&in_face).filter(|(_, f)| !**f).map(|(c, _)| c.clone()));
    Steepest { norm, cells: Some(cells) }
}

/// Newton step on the frozen cells, kept inside their concavity cone.
struct Step {
    delta: Vec<f64>,
    slope: f64,
    /// Value of the quadratic model at `delta`.
    model: f64,
    /// Stationarity residual on these cells.
    residual: f64,
    ridges: Vec<Ridge>,
    flat: Vec<bool>,
}

fn newton_step(x: &[Point], w: &[f64], y: &[f64], mesh: &Mesh) -> Option<Step> {
    let newton = Newton::new(mesh, w, y);
    let ridges = mesh.ridges(x);
    let (rows, flat) = ridge_rows(mesh, &ridges, y);
    let all: Vec<&Row> = rows.iter().collect();
    let (delta, lambda) = cone_qp(&newton.g, &newton.h, &all)?;
    let slope = newton.slope(&delta);
    let model = slope + 0.5 * newton.quad(&delta);
    let residual = kkt_residual(&newton.g, &flat, &rows, &lambda);
    Some(Step { delta, slope, model, residual, ridges, flat })
}

#[derive(Debug, Clone)]
pub(crate) struct SolverOutput {
    pub heights: Vec<f64>,
    pub cells: Vec<Vec<usize>>,
    pub sigma: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub note: &'static str,
}

/// Log of the moment-matched Gaussian at every point.
fn gaussian_start(x: &[Point], w: &[f64]) -> Result<Vec<f64>, MleError> {
    let d = x[0].dim();
    let mut mean = vec![0.0; d];
    for (p, wi) in x.iter().zip(w) {
        for (m, c) in mean.iter_mut().zip(p.coords()) {
            *m += wi * c;
        }
    }
    let mut cov = vec![0.0; d * d];
    for (p, wi) in x.iter().zip(w) {
        let c = p.coords();
        for r in 0..d {
            for s in 0..d {
                cov[r * d + s] += wi * (c[r] - mean[r]) * (c[s] - mean[s]);
            }
        }
    }
    let g = Gaussian::new(mean, cov).map_err(MleError::Density)?;
    let model = DensityModel::from(g);
    Ok(x.iter().map(|p| model.ln_pdf(p.coords())).collect())
}

/// Minimises `sigma` over heights at the distinct points `x` with weights
/// `w` (summing to one).
pub(crate) fn solve(x: &[Point], w: &[f64], opts: &SolverOptions) -> Result<SolverOutput, MleError> {
    let mut y = gaussian_start(x, w)?;
    let mut mesh = Mesh::build(x, &y)?;
    let mut sigma = mesh.sigma(w, &y);

    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut note = "max-iterations";
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut floor_check = None;

    loop {
        if iterations >= opts.max_iterations {
            break;
        }
        let Some(step) = newton_step(x, w, &y, &mesh) else {
            note = "subproblem-failed";
            break;
        };
        residual = step.residual;
        history.push(sigma);
        let win = opts.stagnation_window;
        if history.len() > win {
            let old = history[history.len() - 1 - win];
            if (old - sigma).abs() <= opts.stagnation_rel * sigma.abs().max(1.0) {
                converged = true;
                note = "stagnated";
                break;
            }
        }
        iterations += 1;

        let stalled = step.residual < opts.tolerance || step.model > -1e-12 * sigma.abs().max(1.0);
        if !stalled {
            // The step stays in the concavity cone of the frozen cells,
            // where they give the true surface.
            let mut alpha = 1.0;
            while alpha > 1e-10 && step.slope < 0.0 {
                let yt: Vec<f64> = y.iter().zip(&step.delta).map(|(a, b)| a + alpha * b).collect();
                let st = mesh.sigma(w, &yt);
                if st <= sigma + 1e-4 * alpha * step.slope {
                    y = yt;
                    sigma = st;
                    break;
                }
                alpha *= 0.5;
            }
            if alpha > 1e-10 && step.slope < 0.0 {
                continue;
            }
        }

        // No progress on these cells: look across all triangulations of the
        // flat faces.
        let st = steepest(x, w, &y, &mesh, &step.ridges, &step.flat, opts.tolerance);
        residual = st.norm;
        if st.norm < opts.tolerance {
            converged = true;
            note = "converged";
            break;
        }
        // Nothing moved since the last look: the objective is at its
        // floating-point floor.
        if floor_check == Some(sigma) {
            converged = true;
            note = "stagnated";
            break;
        }
        floor_check = Some(sigma);
        match st.cells {
            Some(c) if canonical(&c) != canonical(&mesh.cells) => mesh = Mesh::new(x, c),
            _ => {
                converged = true;
                note = "stagnated";
                break;
            }
        }
    }

    // Exact unit mass: the optimal shift of all heights.
    let shift = mesh.integral(&y).ln();
    y.iter_mut().for_each(|h| *h -= shift);
    let sigma = mesh.sigma(w, &y);
    Ok(SolverOutput {
        heights: y,
        cells: mesh.cells,
        sigma,
        residual,
        iterations,
        converged,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_point_splits_containing_cells() {
        let x = vec![
            Point::from([0.0, 0.0]),
            Point::from([1.0, 0.0]),
            Point::from([0.0, 1.0]),
            Point::from([1.0, 1.0]),
            Point::from([0.2, 0.2]),
            Point::from([0.5, 0.5]),
        ];
        let mut cells = vec![vec![0, 1, 2], vec![1, 3, 2]];
        insert_point(&x, &mut cells, 4);
        assert_eq!(cells.len(), 4);
        // On the shared edge: both neighbours split in two.
        insert_point(&x, &mut cells, 5);
        assert_eq!(cells.len(), 6);
        let total: f64 = cells.iter().map(|c| volume(&x, c)).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn flat_ridges_are_detected() {
        let x: Vec<Point> = [0.0, 1.0, 2.0, 3.0].iter().map(|&v| Point::from([v])).collect();
        let mesh = Mesh::new(&x, vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
        let y = [0.0, 1.0, 2.0, 1.0];
        let ridges = mesh.ridges(&x);
        let (_, flat) = ridge_rows(&mesh, &ridges, &y);
        let at: Vec<(usize, bool)> = ridges.iter().map(|r| r.q).zip(flat).collect();
        assert!(at.contains(&(2, true)) || at.contains(&(1, true)));
        assert!(at.iter().filter(|(_, f)| *f).count() == 1);
    }
}

//! A small dense two-phase simplex solver for `min c.x, A x = b, x >= 0`.
//!
//! Only meant for the tiny feasibility problems of the brute-force checkers
//! (separability, hull membership, Chebyshev centres): a few dozen rows and
//! columns. Bland's rule keeps it cycle-free.

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-10;

struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.cols + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let cols = self.cols;
        let p = self.at(pr, pc);
        for c in 0..cols {
            self.t[pr * cols + c] /= p;
        }
        for r in 0..self.rows {
            if r != pr {
                let f = self.at(r, pc);
                if f != 0.0 {
                    for c in 0..cols {
                        self.t[r * cols + c] -= f * self.t[pr * cols + c];
                    }
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations on objective row `obj` (the last row), allowing
    /// entering columns `< allowed`. Returns false when unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        let m = self.rows - 1;
        let rhs = self.cols - 1;
        for _ in 0..10_000 {
            let Some(pc) = (0..allowed).find(|&c| self.at(m, c) < -EPS) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.at(r, pc);
                if a > EPS {
                    let ratio = self.at(r, rhs) / a;
                    match best {
                        None => best = Some((r, ratio)),
                        Some((br, bv)) => {
                            if ratio < bv - EPS || (ratio <= bv + EPS && self.basis[r] < self.basis[br]) {
                                best = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match best {
                None => return false,
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
        true
    }
}

/// Minimises `c.x` subject to `A x = b`, `x >= 0`. `a` holds one row per
/// constraint.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    let cols = n + m + 1;
    let rows = m + 1;
    let mut t = vec![0.0; rows * cols];
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[r * cols + j] = sign * a[r][j];
        }
        t[r * cols + n + r] = 1.0;
        t[r * cols + cols - 1] = sign * b[r];
    }
    // Phase 1 objective: sum of artificials, expressed in non-basic terms.
    for r in 0..m {
        for j in 0..cols {
            if !(n..n + m).contains(&j) {
                t[m * cols + j] -= t[r * cols + j];
            }
        }
    }
    let mut tab = Tableau { rows, cols, t, basis: (n..n + m).collect() };
    tab.run(n + m);
    if -tab.at(m, cols - 1) > 1e-8 {
        return LpOutcome::Infeasible;
    }
    // Drive artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(pc) = (0..n).find(|&j| tab.at(r, j).abs() > EPS) {
                tab.pivot(r, pc);
            }
        }
    }
    // Phase 2 objective row.
    for j in 0..cols {
        tab.t[m * cols + j] = if j < n { c[j] } else { 0.0 };
    }
    for r in 0..m {
        let bj = tab.basis[r];
        if bj < n {
            let f = tab.at(m, bj);
            if f != 0.0 {
                for j in 0..cols {
                    tab.t[m * cols + j] -= f * tab.t[r * cols + j];
                }
            }
        }
    }
    // Artificial columns may not re-enter.
    if !tab.run(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.at(r, cols - 1);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

/// True when `A x = b, x >= 0` has a solution.
pub fn feasible(a: &[Vec<f64>], b: &[f64]) -> bool {
    let n = a.first().map_or(0, |r| r.len());
    matches!(minimize(&vec![0.0; n], a, b), LpOutcome::Optimal { .. })
}

/// True when `x` is a convex combination of `points`.
pub fn in_convex_hull<P: AsRef<[f64]>>(points: &[P], x: &[f64]) -> bool {
    if points.is_empty() {
        return false;
    }
    let d = x.len();
    let k = points.len();
    let mut a = vec![vec![0.0; k]; d + 1];
    for (j, p) in points.iter().enumerate() {
        for (i, &c) in p.as_ref().iter().enumerate() {
            a[i][j] = c;
        }
        a[d][j] = 1.0;
    }
    let mut b = x.to_vec();
    b.push(1.0);
    feasible(&a, &b)
}

/// True when the convex hulls of `p` and `q` intersect.
pub fn hulls_intersect<P: AsRef<[f64]>>(p: &[P], q: &[P]) -> bool {
    if p.is_empty() || q.is_empty() {
        return false;
    }
    let d = p[0].as_ref().len();
    let (kp, kq) = (p.len(), q.len());
    // sum l_i p_i - sum m_j q_j = 0, sum l = 1, sum m = 1.
    let mut a = vec![vec![0.0; kp + kq]; d + 2];
    for (j, pt) in p.iter().enumerate() {
        for (i, &c) in pt.as_ref().iter().enumerate() {
            a[i][j] = c;
        }
        a[d][j] = 1.0;
    }
    for (j, pt) in q.iter().enumerate() {
        for (i, &c) in pt.as_ref().iter().enumerate() {
            a[i][kp + j] = -c;
        }
        a[d + 1][kp + j] = 1.0;
    }
    let mut b = vec![0.0; d + 2];
    b[d] = 1.0;
    b[d + 1] = 1.0;
    feasible(&a, &b)
}

/// Centre and radius of the largest ball inside `{x : a_i.x <= b_i}`,
/// with each `a_i` of unit length. `None` when infeasible or unbounded.
pub fn chebyshev_center(normals: &[Vec<f64>], offsets: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = normals.len();
    let d = normals.first()?.len();
    // Variables: x+ (d), x- (d), r, slacks (m). Maximise r.
    let n = 2 * d + 1 + m;
    let mut a = vec![vec![0.0; n]; m];
    for i in 0..m {
        let norm = normals[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        for k in 0..d {
            a[i][k] = normals[i][k];
            a[i][d + k] = -normals[i][k];
        }
        a[i][2 * d] = norm;
        a[i][2 * d + 1 + i] = 1.0;
    }
    let mut c = vec![0.0; n];
    c[2 * d] = -1.0;
    match minimize(&c, &a, offsets) {
        LpOutcome::Optimal { x, value } => {
            let centre = (0..d).map(|k| x[k] - x[d + k]).collect();
            Some((centre, -value))
        }
        _ => None,
    }
}

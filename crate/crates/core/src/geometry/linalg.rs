//! Small dense kernels for d <= 6 matrices, stored row-major in flat slices.

/// Determinant of an `n x n` row-major matrix via partial pivoting.
pub fn det(mut m: Vec<f64>, n: usize) -> f64 {
    debug_assert_eq!(m.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f != 0.0 {
                for c in col..n {
                    m[r * n + c] -= f * m[col * n + c];
                }
            }
        }
    }
    det
}

/// Solves `A x = b` for a square row-major `A`. Returns `None` when singular.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    Some(x)
}

/// Normal of the hyperplane through `pts` (exactly `dim` points in R^dim),
/// via the generalised cross product of the edge vectors. Not normalised.
pub fn hyperplane_normal(pts: &[&[f64]]) -> Vec<f64> {
    let dim = pts.len();
    let base = pts[0];
    let rows = dim - 1;
    let mut normal = vec![0.0; dim];
    if dim == 1 {
        normal[0] = 1.0;
        return normal;
    }
    let edges: Vec<f64> = pts[1..]
        .iter()
        .flat_map(|p| p.iter().zip(base).map(|(a, b)| a - b))
        .collect();
    let mut minor = vec![0.0; rows * rows];
    for (j, nj) in normal.iter_mut().enumerate() {
        for r in 0..rows {
            let mut cc = 0;
            for c in 0..dim {
                if c != j {
                    minor[r * rows + cc] = edges[r * dim + c];
                    cc += 1;
                }
            }
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *nj = sign * det(minor.clone(), rows);
    }
    normal
}

/// Signed volume times d! of the simplex with vertices `pts` (d+1 points in R^d).
pub fn simplex_det(pts: &[&[f64]]) -> f64 {
    let d = pts.len() - 1;
    if d == 0 {
        return 1.0;
    }
    let base = pts[0];
    let m: Vec<f64> = pts[1..]
        .iter()
        .flat_map(|p| p.iter().zip(base).map(|(a, b)| a - b))
        .collect();
    det(m, d)
}

/// Barycentric coordinates of `x` in the simplex `pts`.
pub fn barycentric(pts: &[&[f64]], x: &[f64]) -> Option<Vec<f64>> {
    let d = pts.len() - 1;
    if d == 0 {
        return Some(vec![1.0]);
    }
    let base = pts[0];
    // Columns are edge vectors: solve E * lambda_rest = x - base.
    let mut a = vec![0.0; d * d];
    for (c, p) in pts[1..].iter().enumerate() {
        for r in 0..d {
            a[r * d + c] = p[r] - base[r];
        }
    }
    let rhs: Vec<f64> = x.iter().zip(base).map(|(a, b)| a - b).collect();
    let rest = solve(a, rhs)?;
    let mut out = Vec::with_capacity(d + 1);
    out.push(1.0 - rest.iter().sum::<f64>());
    out.extend(rest);
    Some(out)
}

/// d! as f64.
pub fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

//! Point location in a triangulation via a uniform bucket grid.

use super::{Point, Triangulation};

/// Barycentric slack accepted as "inside" a cell.
const BARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub cell: usize,
    pub bary: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CellLocator {
    d: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    inv_step: Vec<f64>,
    res: Vec<usize>,
    offsets: Vec<u32>,
    items: Vec<u32>,
    // Per cell: base vertex (d) then inverse edge matrix (d*d, row-major).
    frames: Vec<f64>,
    valid: Vec<bool>,
}

impl CellLocator {
    pub fn new(t: &Triangulation) -> Self {
        let cells: Vec<&[usize]> = t.simplices.iter().map(|s| s.vertex_indices.as_slice()).collect();
        CellLocator::from_cells(&t.vertices, &cells)
    }

    /// Locator for simplices given as index lists into `vertices`.
    pub fn from_cells<C: AsRef<[usize]>>(vertices: &[Point], cells: &[C]) -> Self {
        let d = vertices[0].dim();
        let nc = cells.len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for s in cells {
            for &v in s.as_ref() {
                for k in 0..d {
                    lo[k] = lo[k].min(vertices[v][k]);
                    hi[k] = hi[k].max(vertices[v][k]);
                }
            }
        }
        let per_axis = ((2.0 * nc.max(1) as f64).powf(1.0 / d as f64).ceil() as usize).clamp(1, 4096);
        let res = vec![per_axis; d];
        let inv_step: Vec<f64> = (0..d)
            .map(|k| {
                let w = hi[k] - lo[k];
                if w > 0.0 {
                    per_axis as f64 / w
                } else {
                    0.0
                }
            })
            .collect();

        let stride = d + d * d;
        let mut frames = vec![0.0; nc * stride];
        let mut valid = vec![false; nc];
        for (c, s) in cells.iter().enumerate() {
            let pts: Vec<&[f64]> = s.as_ref().iter().map(|&i| vertices[i].coords()).collect();
            let f = &mut frames[c * stride..(c + 1) * stride];
            f[..d].copy_from_slice(pts[0]);
            if let Some(inv) = edge_inverse(&pts) {
                f[d..].copy_from_slice(&inv);
                valid[c] = true;
            }
        }

        let total: usize = res.iter().product();
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); total];
        let mut loc = CellLocator {
            d,
            lo,
            hi,
            inv_step,
            res,
            offsets: Vec::new(),
            items: Vec::new(),
            frames,
            valid,
        };
        for (c, s) in cells.iter().enumerate() {
            if !loc.valid[c] {
                continue;
            }
            let mut a = vec![usize::MAX; d];
            let mut b = vec![0usize; d];
            for &v in s.as_ref() {
                for k in 0..d {
                    let i = loc.axis_bucket(k, vertices[v][k]);
                    a[k] = a[k].min(i);
                    b[k] = b[k].max(i);
                }
            }
            // Enumerate the box of buckets [a, b].
            let mut idx = a.clone();
            loop {
                lists[loc.flat(&idx)].push(c as u32);
                let mut k = 0;
                while k < d {
                    if idx[k] < b[k] {
                        idx[k] += 1;
                        break;
                    }
                    idx[k] = a[k];
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
        }
        loc.offsets.reserve(total + 1);
        loc.offsets.push(0);
        for l in &lists {
            loc.items.extend_from_slice(l);
            loc.offsets.push(loc.items.len() as u32);
        }
        loc
    }

    fn axis_bucket(&self, k: usize, x: f64) -> usize {
        let i = ((x - self.lo[k]) * self.inv_step[k]).floor();
        (i.max(0.0) as usize).min(self.res[k] - 1)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for k in (0..self.d).rev() {
            f = f * self.res[k] + idx[k];
        }
        f
    }

    /// Barycentric coordinates of `x` with respect to `cell`.
    pub fn bary_into(&self, cell: usize, x: &[f64], out: &mut Vec<f64>) {
        let d = self.d;
        let stride = d + d * d;
        let f = &self.frames[cell * stride..(cell + 1) * stride];
        out.clear();
        out.push(0.0);
        let mut rest = 0.0;
        for r in 0..d {
            let row = &f[d + r * d..d + (r + 1) * d];
            let l: f64 = row.iter().zip(x).zip(&f[..d]).map(|((m, xi), b)| m * (xi - b)).sum();
            rest += l;
            out.push(l);
        }
        out[0] = 1.0 - rest;
    }

    pub fn cell_count(&self) -> usize {
        self.valid.len()
    }

    /// Like [`locate`](Self::locate) but falls back to a scan over all
    /// cells, returning the cell with the largest minimum barycentric
    /// coordinate.
    pub fn locate_nearest(&self, x: &[f64]) -> Option<Location> {
        if let Some(l) = self.locate(x) {
            return Some(l);
        }
        let mut buf = Vec::new();
        let mut best: Option<(f64, usize)> = None;
        for c in (0..self.valid.len()).filter(|&c| self.valid[c]) {
            self.bary_into(c, x, &mut buf);
            let m = buf.iter().cloned().fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(bm, _)| m > bm) {
                best = Some((m, c));
            }
        }
        best.map(|(_, c)| {
            self.bary_into(c, x, &mut buf);
            Location { cell: c, bary: buf }
        })
    }

    pub fn locate(&self, x: &[f64]) -> Option<Location> {
        let d = self.d;
        let slack = 1e-12;
        for k in 0..d {
            let w = (self.hi[k] - self.lo[k]).max(1.0) * slack;
            if x[k] < self.lo[k] - w || x[k] > self.hi[k] + w {
                return None;
            }
        }
        let idx: Vec<usize> = (0..d).map(|k| self.axis_bucket(k, x[k])).collect();
        let b = self.flat(&idx);
        let mut best: Option<(f64, usize)> = None;
        let mut buf = Vec::with_capacity(d + 1);
        for &c in &self.items[self.offsets[b] as usize..self.offsets[b + 1] as usize] {
            let c = c as usize;
            self.bary_into(c, x, &mut buf);
            let m = buf.iter().cloned().fold(f64::INFINITY, f64::min);
            if m >= 0.0 {
                return Some(Location { cell: c, bary: buf });
            }
            if best.is_none_or(|(bm, _)| m > bm) {
                best = Some((m, c));
            }
        }
        match best {
            Some((m, c)) if m >= -BARY_TOL => {
                self.bary_into(c, x, &mut buf);
                Some(Location { cell: c, bary: buf })
            }
            _ => None,
        }
    }
}

fn edge_inverse(pts: &[&[f64]]) -> Option<Vec<f64>> {
    let d = pts.len() - 1;
    let mut e = vec![0.0; d * d];
    for (c, p) in pts[1..].iter().enumerate() {
        for r in 0..d {
            e[r * d + c] = p[r] - pts[0][r];
        }
    }
    let mut inv = vec![0.0; d * d];
    for c in 0..d {
        let mut unit = vec![0.0; d];
        unit[c] = 1.0;
        let col = super::linalg::solve(e.clone(), unit)?;
        for r in 0..d {
            inv[r * d + c] = col[r];
        }
    }
    Some(inv)
}

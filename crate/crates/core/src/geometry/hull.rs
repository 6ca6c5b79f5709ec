//! Quickhull-style incremental convex hull in dimensions 1..=6 with facet
//! conflict lists. Points within the coplanarity tolerance of a facet are
//! absorbed into it, so every output facet is a simplex and every output
//! vertex is strictly extreme up to tolerance.

use std::collections::HashMap;

use super::linalg::hyperplane_normal;
use super::{bbox_scale, check_points, dot, GeometryError, Point, PolytopeV, Simplex, Triangulation, COPLANAR_REL_TOL};

#[derive(Debug, Clone)]
pub(crate) struct RawFacet {
    pub vertices: Vec<usize>,
    pub normal: Vec<f64>,
    pub offset: f64,
    /// `neighbors[k]` shares every vertex except `vertices[k]`.
    pub neighbors: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct RawHull {
    pub dim: usize,
    pub facets: Vec<RawFacet>,
    pub eps: f64,
}

impl RawHull {
    pub fn vertex_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

struct Face {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    neighbors: Vec<usize>,
    outside: Vec<usize>,
    alive: bool,
}

pub(crate) fn quickhull<P: AsRef<[f64]>>(points: &[P]) -> Result<RawHull, GeometryError> {
    let dim = check_points(points)?;
    if points.len() < dim + 1 {
        return Err(GeometryError::TooFewPoints { dim, needed: dim + 1, got: points.len() });
    }
    let eps = COPLANAR_REL_TOL * bbox_scale(points);
    let pt = |i: usize| points[i].as_ref();
    if dim == 1 {
        let (mut lo, mut hi) = (0, 0);
        for i in 0..points.len() {
            if pt(i)[0] < pt(lo)[0] {
                lo = i;
            }
            if pt(i)[0] > pt(hi)[0] {
                hi = i;
            }
        }
        if pt(hi)[0] - pt(lo)[0] <= eps {
            return Err(GeometryError::DegenerateInput { dim });
        }
        let facets = vec![
            RawFacet { vertices: vec![lo], normal: vec![-1.0], offset: -pt(lo)[0], neighbors: vec![1] },
            RawFacet { vertices: vec![hi], normal: vec![1.0], offset: pt(hi)[0], neighbors: vec![0] },
        ];
        return Ok(RawHull { dim, facets, eps });
    }

    let chosen = initial_simplex(points, dim, eps)?;
    let mut interior = vec![0.0; dim];
    for &i in &chosen {
        for (c, v) in interior.iter_mut().zip(pt(i)) {
            *c += v / (dim + 1) as f64;
        }
    }

    let make_face = |verts: Vec<usize>, neighbors: Vec<usize>| -> Face {
        let refs: Vec<&[f64]> = verts.iter().map(|&i| pt(i)).collect();
        let mut normal = hyperplane_normal(&refs);
        let len = dot(&normal, &normal).sqrt();
        if len > 0.0 {
            normal.iter_mut().for_each(|c| *c /= len);
        }
        let mut offset = dot(&normal, refs[0]);
        if dot(&normal, &interior) > offset {
            normal.iter_mut().for_each(|c| *c = -*c);
            offset = -offset;
        }
        Face { verts, normal, offset, neighbors, outside: Vec::new(), alive: true }
    };

    let mut faces: Vec<Face> = Vec::new();
    for omit in 0..=dim {
        let verts: Vec<usize> = chosen.iter().enumerate().filter(|&(k, _)| k != omit).map(|(_, &v)| v).collect();
        let neighbors = verts.iter().map(|v| chosen.iter().position(|c| c == v).unwrap()).collect();
        faces.push(make_face(verts, neighbors));
    }

    let dist = |f: &Face, i: usize| dot(&f.normal, pt(i)) - f.offset;

    let mut is_chosen = vec![false; points.len()];
    for &c in &chosen {
        is_chosen[c] = true;
    }
    for i in 0..points.len() {
        if is_chosen[i] {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| dot(&f.normal, pt(i)) - f.offset > eps) {
            f.outside.push(i);
        }
    }

    let mut stack: Vec<usize> = (0..faces.len()).filter(|&f| !faces[f].outside.is_empty()).collect();
    // 0 = unvisited this round, 1 = visible, 2 = not visible.
    let mut mark: Vec<u8> = vec![0; faces.len()];
    let mut touched: Vec<usize> = Vec::new();

    while let Some(start) = stack.pop() {
        if !faces[start].alive || faces[start].outside.is_empty() {
            continue;
        }
        let apex = *faces[start]
            .outside
            .iter()
            .max_by(|&&a, &&b| dist(&faces[start], a).total_cmp(&dist(&faces[start], b)))
            .unwrap();

        for &t in &touched {
            mark[t] = 0;
        }
        touched.clear();
        let mut visible = vec![start];
        mark[start] = 1;
        touched.push(start);
        let mut head = 0;
        while head < visible.len() {
            let f = visible[head];
            head += 1;
            for k in 0..dim {
                let nb = faces[f].neighbors[k];
                if mark[nb] == 0 {
                    touched.push(nb);
                    if dist(&faces[nb], apex) > eps {
                        mark[nb] = 1;
                        visible.push(nb);
                    } else {
                        mark[nb] = 2;
                    }
                }
            }
        }

        let first_new = faces.len();
        let mut ridge_map: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for &v in &visible {
            for k in 0..dim {
                let nb = faces[v].neighbors[k];
                if mark[nb] != 1 {
                    let mut verts: Vec<usize> =
                        faces[v].verts.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
                    verts.push(apex);
                    let mut neighbors = vec![usize::MAX; dim];
                    neighbors[dim - 1] = nb;
                    let nf = faces.len();
                    faces.push(make_face(verts, neighbors));
                    mark.push(0);
                    if let Some(slot) = faces[nb].neighbors.iter().position(|&x| x == v) {
                        faces[nb].neighbors[slot] = nf;
                    }
                    for j in 0..dim - 1 {
                        let mut key: Vec<usize> =
                            faces[nf].verts.iter().enumerate().filter(|&(q, _)| q != j).map(|(_, &x)| x).collect();
                        key.sort_unstable();
                        if let Some((other, oslot)) = ridge_map.remove(&key) {
                            faces[nf].neighbors[j] = other;
                            faces[other].neighbors[oslot] = nf;
                        } else {
                            ridge_map.insert(key, (nf, j));
                        }
                    }
                }
            }
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &v in &visible {
            faces[v].alive = false;
            orphans.append(&mut faces[v].outside);
        }
        for i in orphans {
            if i == apex {
                continue;
            }
            for nf in first_new..faces.len() {
                if dist(&faces[nf], i) > eps {
                    faces[nf].outside.push(i);
                    break;
                }
            }
        }
        for nf in first_new..faces.len() {
            if !faces[nf].outside.is_empty() {
                stack.push(nf);
            }
        }
    }

    // Compact, remapping neighbour ids.
    let mut remap = vec![usize::MAX; faces.len()];
    let mut next = 0;
    for (i, f) in faces.iter().enumerate() {
        if f.alive {
            remap[i] = next;
            next += 1;
        }
    }
    let facets = faces
        .into_iter()
        .filter(|f| f.alive)
        .map(|f| RawFacet {
            neighbors: f.neighbors.iter().map(|&n| remap[n]).collect(),
            vertices: f.verts,
            normal: f.normal,
            offset: f.offset,
        })
        .collect();
    Ok(RawHull { dim, facets, eps })
}

fn initial_simplex<P: AsRef<[f64]>>(points: &[P], dim: usize, eps: f64) -> Result<Vec<usize>, GeometryError> {
    let pt = |i: usize| points[i].as_ref();
    let mut best_axis = (0, 0, 0, f64::NEG_INFINITY);
    for k in 0..dim {
        let (mut lo, mut hi) = (0, 0);
        for i in 0..points.len() {
            if pt(i)[k] < pt(lo)[k] {
                lo = i;
            }
            if pt(i)[k] > pt(hi)[k] {
                hi = i;
            }
        }
        let ext = pt(hi)[k] - pt(lo)[k];
        if ext > best_axis.3 {
            best_axis = (k, lo, hi, ext);
        }
    }
    let (_, i0, i1, ext) = best_axis;
    if ext <= eps {
        return Err(GeometryError::DegenerateInput { dim });
    }
    let origin = pt(i0).to_vec();
    let mut chosen = vec![i0, i1];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let push_basis = |basis: &mut Vec<Vec<f64>>, v: Vec<f64>| {
        let mut r = v;
        for b in basis.iter() {
            let c = dot(&r, b);
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = dot(&r, &r).sqrt();
        r.iter_mut().for_each(|x| *x /= n);
        basis.push(r);
    };
    push_basis(&mut basis, pt(i1).iter().zip(&origin).map(|(a, b)| a - b).collect());
    while chosen.len() < dim + 1 {
        let mut best = (usize::MAX, 0.0f64);
        for i in 0..points.len() {
            let mut r: Vec<f64> = pt(i).iter().zip(&origin).map(|(a, b)| a - b).collect();
            for b in &basis {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = dot(&r, &r).sqrt();
            if n > best.1 {
                best = (i, n);
            }
        }
        if best.1 <= eps {
            return Err(GeometryError::DegenerateInput { dim });
        }
        chosen.push(best.0);
        push_basis(&mut basis, pt(best.0).iter().zip(&origin).map(|(a, b)| a - b).collect());
    }
    Ok(chosen)
}

/// Convex hull of a point set, as a minimal vertex representation.
pub fn convex_hull(points: &[Point]) -> Result<PolytopeV, GeometryError> {
    let raw = quickhull(points)?;
    Ok(PolytopeV::from_raw(points, &raw))
}

/// Result of [`upper_hull_triangulation`]: the cells of the least concave
/// majorant, indexed into the input points.
#[derive(Debug, Clone)]
pub struct UpperHull {
    pub triangulation: Triangulation,
    /// `active[i]` is true when input point `i` is a vertex of the majorant.
    pub active: Vec<bool>,
}

/// Triangulates the least concave majorant of `(x_i, height_i)` over the
/// convex hull of the `x_i`.
pub fn upper_hull_triangulation(lifted: &[(Point, f64)]) -> Result<UpperHull, GeometryError> {
    let base: Vec<Point> = lifted.iter().map(|(p, _)| p.clone()).collect();
    let heights: Vec<f64> = lifted.iter().map(|(_, h)| *h).collect();
    let raw = lifted_hull(&base, &heights)?;
    Ok(upper_from_raw(base, &raw))
}

/// Hull of the lifted points plus one sentinel below the base centroid. The
/// sentinel keeps the lifted set full-dimensional when the heights are
/// affine (e.g. n = d+1, or a flat tent) and never touches an upper facet.
pub(crate) fn lifted_hull(base: &[Point], heights: &[f64]) -> Result<RawHull, GeometryError> {
    let d = check_points(base)?;
    if heights.iter().any(|h| !h.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let n = base.len();
    if n < d + 1 {
        return Err(GeometryError::TooFewPoints { dim: d, needed: d + 1, got: n });
    }
    let (lo, hi) = heights.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &h| (a.min(h), b.max(h)));
    let mut pts: Vec<Vec<f64>> = base
        .iter()
        .zip(heights)
        .map(|(p, h)| {
            let mut v = p.coords().to_vec();
            v.push(*h);
            v
        })
        .collect();
    let mut sentinel = vec![0.0; d + 1];
    for p in base {
        for (s, c) in sentinel.iter_mut().zip(p.coords()) {
            *s += c / n as f64;
        }
    }
    sentinel[d] = lo - (hi - lo).max(1.0);
    pts.push(sentinel);
    // Facets through the sentinel point downwards, so the upper facets are
    // exactly those of the lifted data.
    quickhull(&pts).map_err(|e| match e {
        GeometryError::DegenerateInput { .. } => GeometryError::DegenerateInput { dim: d },
        other => other,
    })
}

pub(crate) fn upper_from_raw(base: Vec<Point>, raw: &RawHull) -> UpperHull {
    let d = raw.dim - 1;
    let mut active = vec![false; base.len()];
    let mut simplices = Vec::new();
    for f in &raw.facets {
        if f.normal[d] > 1e-12 && f.vertices.iter().all(|&v| v < base.len()) {
            for &v in &f.vertices {
                active[v] = true;
            }
            simplices.push(Simplex::new(f.vertices.clone()));
        }
    }
    UpperHull { triangulation: Triangulation::new(base, simplices), active }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[f64]]) -> Vec<Point> {
        v.iter().map(|c| Point::from(*c)).collect()
    }

    #[test]
    fn square_with_center() {
        let p = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[0.5, 0.5]]);
        let raw = quickhull(&p).unwrap();
        assert_eq!(raw.vertex_indices(), vec![0, 1, 2, 3]);
        assert_eq!(raw.facets.len(), 4);
    }

    #[test]
    fn interval_in_one_dimension() {
        let p = pts(&[&[3.0], &[1.0], &[2.0]]);
        let raw = quickhull(&p).unwrap();
        assert_eq!(raw.vertex_indices(), vec![0, 1]);
    }

    #[test]
    fn degenerate_collinear() {
        let p = pts(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        assert!(matches!(quickhull(&p), Err(GeometryError::DegenerateInput { .. })));
    }

    #[test]
    fn cube_hull_is_closed() {
        let mut p = Vec::new();
        for i in 0..8 {
            p.push(Point::from(vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]));
        }
        p.push(Point::from(vec![0.5, 0.5, 0.5]));
        let raw = quickhull(&p).unwrap();
        assert_eq!(raw.vertex_indices(), (0..8).collect::<Vec<_>>());
        assert_eq!(raw.facets.len(), 12);
        for (fi, f) in raw.facets.iter().enumerate() {
            for &n in &f.neighbors {
                assert!(raw.facets[n].neighbors.contains(&fi));
            }
        }
    }

    #[test]
    fn upper_hull_concave_data() {
        let lifted = vec![(Point::from([0.0]), 0.0), (Point::from([0.5]), 1.0), (Point::from([1.0]), 0.0)];
        let up = upper_hull_triangulation(&lifted).unwrap();
        assert_eq!(up.triangulation.simplices.len(), 2);
        assert!(up.active.iter().all(|&a| a));
    }

    #[test]
    fn upper_hull_drops_low_point() {
        let lifted = vec![(Point::from([0.0]), 0.0), (Point::from([0.5]), -1.0), (Point::from([1.0]), 0.0)];
        let up = upper_hull_triangulation(&lifted).unwrap();
        assert_eq!(up.triangulation.simplices.len(), 1);
        assert_eq!(up.active, vec![true, false, true]);
    }
}

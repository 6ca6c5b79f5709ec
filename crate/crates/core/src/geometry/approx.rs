//! Inner and outer polytope approximations of a convex body with a facet
//! budget.
//!
//! Support points are picked by farthest-point greedy over the body's
//! vertices. The inner body is the hull of the support points; the outer
//! body is the intersection of supporting halfspaces at the same points.

use super::{convex_hull, dist_sq, dot, norm, GeometryError, Point, PolytopeH, PolytopeV};

/// An approximating polytope and the volume it misses (inner) or adds
/// (outer) relative to the body.
#[derive(Debug, Clone)]
pub struct Approximation<P> {
    pub polytope: P,
    pub volume_gap: f64,
}

fn greedy_order(k: &PolytopeV, count: usize) -> Vec<usize> {
    let verts = k.vertices();
    let c = k.centroid();
    let first = (0..verts.len())
        .max_by(|&a, &b| dist_sq(&verts[a], &c).total_cmp(&dist_sq(&verts[b], &c)).then(b.cmp(&a)))
        .unwrap();
    let mut order = vec![first];
    let mut mind: Vec<f64> = verts.iter().map(|v| dist_sq(v, &verts[first])).collect();
    while order.len() < count.min(verts.len()) {
        let next = (0..verts.len())
            .max_by(|&a, &b| mind[a].total_cmp(&mind[b]).then(b.cmp(&a)))
            .unwrap();
        if mind[next] <= 0.0 {
            break;
        }
        order.push(next);
        for (m, v) in mind.iter_mut().zip(verts) {
            *m = m.min(dist_sq(v, &verts[next]));
        }
    }
    order
}

/// Polytope `P ⊆ K` with at most `budget` facets.
pub fn inner_approx(k: &PolytopeV, budget: usize) -> Result<Approximation<PolytopeV>, GeometryError> {
    let d = k.dim();
    if budget < d + 1 {
        return Err(GeometryError::InfeasibleBudget { budget, min: d + 1 });
    }
    if budget >= k.facets().len() {
        return Ok(Approximation { polytope: k.clone(), volume_gap: 0.0 });
    }
    let order = greedy_order(k, k.vertices().len());
    let hull_of = |m: usize| -> Option<PolytopeV> {
        let pts: Vec<Point> = order[..m].iter().map(|&i| k.vertices()[i].clone()).collect();
        convex_hull(&pts).ok()
    };
    let polytope = if d == 2 {
        hull_of(budget.min(order.len())).ok_or(GeometryError::DegenerateInput { dim: d })?
    } else {
        // Facet counts grow (roughly monotonically) with the prefix length.
        let mut lo = d + 1;
        let mut best = None;
        while lo <= order.len() {
            if let Some(p) = hull_of(lo) {
                best = Some(p);
                break;
            }
            lo += 1;
        }
        let mut best = best.ok_or(GeometryError::DegenerateInput { dim: d })?;
        let mut hi = order.len();
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            match hull_of(mid) {
                Some(p) if p.facets().len() <= budget => {
                    best = p;
                    lo = mid;
                }
                _ => hi = mid - 1,
            }
        }
        best
    };
    let volume_gap = (k.volume() - polytope.volume()).max(0.0);
    Ok(Approximation { polytope, volume_gap })
}

/// Polytope `P ⊇ K` with at most `budget` facets.
pub fn outer_approx(k: &PolytopeV, budget: usize) -> Result<Approximation<PolytopeH>, GeometryError> {
    let d = k.dim();
    if budget < d + 1 {
        return Err(GeometryError::InfeasibleBudget { budget, min: d + 1 });
    }
    if budget >= k.facets().len() {
        return Ok(Approximation { polytope: k.halfspaces(), volume_gap: 0.0 });
    }
    let verts = k.vertices();
    let support = |u: &[f64]| verts.iter().map(|v| dot(u, v)).fold(f64::NEG_INFINITY, f64::max);
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); verts.len()];
    for (fi, f) in k.facets().iter().enumerate() {
        for &v in &f.vertices {
            incident[v].push(fi);
        }
    }
    let order = greedy_order(k, budget);
    let mut raw: Vec<(Vec<f64>, f64)> = order
        .iter()
        .map(|&v| {
            let mut u = vec![0.0; d];
            for &fi in &incident[v] {
                for (a, b) in u.iter_mut().zip(&k.facets()[fi].normal) {
                    *a += b;
                }
            }
            let n = norm(&u);
            u.iter_mut().for_each(|a| *a /= n);
            let b = support(&u);
            (u, b)
        })
        .collect();
    let mut polytope = PolytopeH::new(raw.clone())?;
    if !polytope.bounded {
        // Swap in d+1 positively spanning directions.
        raw.truncate(budget - (d + 1));
        for j in 0..=d {
            let u: Vec<f64> = if j < d {
                (0..d).map(|k| if k == j { 1.0 } else { 0.0 }).collect()
            } else {
                vec![-1.0 / (d as f64).sqrt(); d]
            };
            let b = support(&u);
            raw.push((u, b));
        }
        polytope = PolytopeH::new(raw)?;
    }
    let outer_v = polytope.to_polytope_v_with_interior(&k.centroid())?;
    let volume_gap = (outer_v.volume() - k.volume()).max(0.0);
    Ok(Approximation { polytope, volume_gap })
}

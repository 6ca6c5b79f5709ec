use super::{convex_hull, GeometryError, Halfspace, Point, PolytopeV, MEMBERSHIP_TOL};

/// A convex polygon with counter-clockwise vertices. Supports logarithmic
/// membership and halfplane clipping; used by the planar sandwich builder.
#[derive(Debug, Clone)]
pub struct ConvexPolygon {
    verts: Vec<[f64; 2]>,
    bbox: [f64; 4],
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl ConvexPolygon {
    /// Takes vertices already in convex position, in either orientation.
    pub fn from_convex_vertices(mut verts: Vec<[f64; 2]>) -> Self {
        if verts.len() >= 3 {
            let area2: f64 = (0..verts.len()).map(|i| cross([0.0, 0.0], verts[i], verts[(i + 1) % verts.len()])).sum();
            if area2 < 0.0 {
                verts.reverse();
            }
        }
        let bbox = verts.iter().fold(
            [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
            |b, v| [b[0].min(v[0]), b[1].min(v[1]), b[2].max(v[0]), b[3].max(v[1])],
        );
        ConvexPolygon { verts, bbox }
    }

    pub fn empty() -> Self {
        ConvexPolygon::from_convex_vertices(Vec::new())
    }

    /// Regular polygon with `m` vertices on the ellipse `centre + A u`,
    /// `|u| = radius`, where `A` is given row-major.
    pub fn inscribed_ellipse(centre: [f64; 2], a: [f64; 4], radius: f64, m: usize) -> Self {
        let verts = (0..m)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                let (u0, u1) = (radius * t.cos(), radius * t.sin());
                [centre[0] + a[0] * u0 + a[1] * u1, centre[1] + a[2] * u0 + a[3] * u1]
            })
            .collect();
        ConvexPolygon::from_convex_vertices(verts)
    }

    pub fn from_polytope(p: &PolytopeV) -> Self {
        let c = p.centroid();
        let mut v: Vec<[f64; 2]> = p.vertices().iter().map(|q| [q[0], q[1]]).collect();
        v.sort_by(|a, b| (a[1] - c[1]).atan2(a[0] - c[0]).total_cmp(&(b[1] - c[1]).atan2(b[0] - c[0])));
        ConvexPolygon::from_convex_vertices(v)
    }

    pub fn to_polytope(&self) -> Result<PolytopeV, GeometryError> {
        let pts: Vec<Point> = self.verts.iter().map(|v| Point::from(*v)).collect();
        convex_hull(&pts)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.verts
    }

    pub fn is_empty(&self) -> bool {
        self.verts.len() < 3
    }

    pub fn area(&self) -> f64 {
        let n = self.verts.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n).map(|i| cross([0.0, 0.0], self.verts[i], self.verts[(i + 1) % n])).sum::<f64>()
    }

    /// Closed membership in O(log m).
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let n = self.verts.len();
        if n < 3 {
            return false;
        }
        let t = MEMBERSHIP_TOL;
        if x[0] < self.bbox[0] - t || x[0] > self.bbox[2] + t || x[1] < self.bbox[1] - t || x[1] > self.bbox[3] + t {
            return false;
        }
        let v = &self.verts;
        let edge_ok = |a: [f64; 2], b: [f64; 2]| {
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            cross(a, b, x) >= -t * len
        };
        if !edge_ok(v[0], v[1]) || !edge_ok(v[n - 1], v[0]) {
            return false;
        }
        // Fan wedge search around v[0].
        let (mut lo, mut hi) = (1, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if cross(v[0], v[mid], x) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        edge_ok(v[lo], v[hi])
    }

    /// Intersection with `normal . x <= offset`.
    pub fn clip(&self, h: &Halfspace) -> ConvexPolygon {
        let n = self.verts.len();
        let side = |p: [f64; 2]| h.normal[0] * p[0] + h.normal[1] * p[1] - h.offset;
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let (a, b) = (self.verts[i], self.verts[(i + 1) % n]);
            let (sa, sb) = (side(a), side(b));
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                let t = sa / (sa - sb);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        // Drop near-duplicate consecutive vertices produced by the clip.
        let mut dedup: Vec<[f64; 2]> = Vec::with_capacity(out.len());
        for p in out {
            if dedup.last().is_none_or(|q| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() > 1e-12) {
                dedup.push(p);
            }
        }
        while dedup.len() > 1 {
            let (f, l) = (dedup[0], dedup[dedup.len() - 1]);
            if (f[0] - l[0]).abs() + (f[1] - l[1]).abs() <= 1e-12 {
                dedup.pop();
            } else {
                break;
            }
        }
        ConvexPolygon::from_convex_vertices(dedup)
    }

    /// Edge halfplanes with unit outward normals.
    pub fn halfspaces(&self) -> Vec<Halfspace> {
        let n = self.verts.len();
        (0..n)
            .filter_map(|i| {
                let (a, b) = (self.verts[i], self.verts[(i + 1) % n]);
                let normal = [b[1] - a[1], a[0] - b[0]];
                let len = normal[0].hypot(normal[1]);
                (len > 0.0).then(|| Halfspace {
                    normal: vec![normal[0] / len, normal[1] / len],
                    offset: (normal[0] * a[0] + normal[1] * a[1]) / len,
                })
            })
            .collect()
    }

    pub fn clip_all(&self, hs: &[Halfspace]) -> ConvexPolygon {
        hs.iter().fold(self.clone(), |p, h| if p.is_empty() { p } else { p.clip(h) })
    }
}

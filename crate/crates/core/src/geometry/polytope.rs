use super::hull::{quickhull, RawHull};
use super::linalg::{factorial, simplex_det};
use super::lp::chebyshev_center;
use super::{dot, norm, GeometryError, Point, Simplex, Triangulation, MEMBERSHIP_TOL};

/// A facet: vertex indices into the owning polytope, outward unit normal
/// and offset, so the polytope satisfies `normal . x <= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertices: Vec<usize>,
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Vertex representation of a full-dimensional convex polytope.
#[derive(Debug, Clone)]
pub struct PolytopeV {
    vertices: Vec<Point>,
    facets: Vec<Facet>,
    // Simplicial boundary pieces (d vertices each), used for volumes and
    // triangulations. Merged facets may have more than d vertices.
    pieces: Vec<Vec<usize>>,
}

impl PolytopeV {
    pub(crate) fn from_raw<P: AsRef<[f64]>>(points: &[P], raw: &RawHull) -> Self {
        let ids = raw.vertex_indices();
        let mut remap = vec![usize::MAX; points.len()];
        for (new, &old) in ids.iter().enumerate() {
            remap[old] = new;
        }
        let vertices: Vec<Point> = ids.iter().map(|&i| Point::from(points[i].as_ref())).collect();

        // Union coplanar neighbouring pieces into facets.
        let nf = raw.facets.len();
        let mut parent: Vec<usize> = (0..nf).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, f) in raw.facets.iter().enumerate() {
            for &j in &f.neighbors {
                let g = &raw.facets[j];
                let same = f.normal.iter().zip(&g.normal).all(|(a, b)| (a - b).abs() < 1e-9)
                    && (f.offset - g.offset).abs() <= 10.0 * raw.eps;
                if same {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut group_of = vec![usize::MAX; nf];
        let mut facets: Vec<Facet> = Vec::new();
        for i in 0..nf {
            let r = find(&mut parent, i);
            if group_of[r] == usize::MAX {
                group_of[r] = facets.len();
                facets.push(Facet {
                    vertices: Vec::new(),
                    normal: raw.facets[r].normal.clone(),
                    offset: raw.facets[r].offset,
                });
            }
            let g = group_of[r];
            facets[g].vertices.extend(raw.facets[i].vertices.iter().map(|&v| remap[v]));
        }
        for f in &mut facets {
            f.vertices.sort_unstable();
            f.vertices.dedup();
        }
        let pieces = raw
            .facets
            .iter()
            .map(|f| f.vertices.iter().map(|&v| remap[v]).collect())
            .collect();
        PolytopeV { vertices, facets, pieces }
    }

    /// Builds a polytope from explicit vertices and facets (e.g. when
    /// parsing). The simplicial boundary is recomputed from the vertices.
    pub fn from_parts(vertices: Vec<Point>, facets: Vec<Facet>) -> Result<Self, GeometryError> {
        let raw = quickhull(&vertices)?;
        let rebuilt = PolytopeV::from_raw(&vertices, &raw);
        if rebuilt.vertices.len() != vertices.len() {
            return Err(GeometryError::Parse { line: 0, msg: "vertex list is not minimal".into() });
        }
        Ok(PolytopeV { vertices, facets, pieces: rebuilt.pieces })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn centroid(&self) -> Vec<f64> {
        let d = self.dim();
        let mut c = vec![0.0; d];
        for v in &self.vertices {
            for (a, b) in c.iter_mut().zip(v.coords()) {
                *a += b;
            }
        }
        c.iter_mut().for_each(|a| *a /= self.vertices.len() as f64);
        c
    }

    /// Volume as a sum of `|det| / d!` over the cone triangulation.
    pub fn volume(&self) -> f64 {
        let c = self.centroid();
        let d = self.dim();
        let mut total = 0.0;
        for piece in &self.pieces {
            let mut pts: Vec<&[f64]> = vec![&c];
            pts.extend(piece.iter().map(|&i| self.vertices[i].coords()));
            total += simplex_det(&pts).abs();
        }
        total / factorial(d)
    }

    /// Cone triangulation from the vertex centroid (appended as the last vertex).
    pub fn triangulate(&self) -> Triangulation {
        let mut verts = self.vertices.clone();
        let apex = verts.len();
        verts.push(Point::from(self.centroid()));
        let simplices = self
            .pieces
            .iter()
            .map(|p| {
                let mut v = p.clone();
                v.push(apex);
                Simplex::new(v)
            })
            .collect();
        Triangulation::new(verts, simplices)
    }

    pub fn halfspaces(&self) -> PolytopeH {
        PolytopeH {
            halfspaces: self
                .facets
                .iter()
                .map(|f| Halfspace { normal: f.normal.clone(), offset: f.offset })
                .collect(),
            bounded: true,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.facets.iter().all(|f| dot(&f.normal, x) <= f.offset + MEMBERSHIP_TOL)
    }
}

/// `normal . x <= offset` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Halfspace representation.
#[derive(Debug, Clone)]
pub struct PolytopeH {
    pub halfspaces: Vec<Halfspace>,
    pub bounded: bool,
}

impl PolytopeH {
    /// Normalises each halfspace, drops duplicates and records boundedness.
    pub fn new(raw: Vec<(Vec<f64>, f64)>) -> Result<Self, GeometryError> {
        let mut halfspaces: Vec<Halfspace> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            let n = norm(&a);
            if !(n > 0.0) || !b.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            let h = Halfspace { normal: a.iter().map(|v| v / n).collect(), offset: b / n };
            let dup = halfspaces.iter().any(|g| {
                g.normal.iter().zip(&h.normal).all(|(x, y)| (x - y).abs() < 1e-12) && (g.offset - h.offset).abs() < 1e-12
            });
            if !dup {
                halfspaces.push(h);
            }
        }
        let bounded = normals_positively_span(&halfspaces);
        Ok(PolytopeH { halfspaces, bounded })
    }

    pub fn dim(&self) -> usize {
        self.halfspaces.first().map_or(0, |h| h.normal.len())
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    /// Closed membership with the crate-wide tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|h| dot(&h.normal, x) <= h.offset + MEMBERSHIP_TOL)
    }

    /// Vertex enumeration by polar duality around a strictly interior point.
    pub fn to_polytope_v_with_interior(&self, interior: &[f64]) -> Result<PolytopeV, GeometryError> {
        if !self.bounded {
            return Err(GeometryError::Unbounded);
        }
        let d = self.dim();
        let mut dual: Vec<Vec<f64>> = Vec::with_capacity(self.halfspaces.len());
        for h in &self.halfspaces {
            let slack = h.offset - dot(&h.normal, interior);
            if slack <= 0.0 {
                return Err(GeometryError::EmptyInterior);
            }
            dual.push(h.normal.iter().map(|a| a / slack).collect());
        }
        let raw = quickhull(&dual).map_err(|_| GeometryError::Unbounded)?;
        let mut verts: Vec<Point> = Vec::with_capacity(raw.facets.len());
        for f in &raw.facets {
            if f.offset <= 1e-14 {
                return Err(GeometryError::Unbounded);
            }
            let y: Vec<f64> = (0..d).map(|k| interior[k] + f.normal[k] / f.offset).collect();
            verts.push(Point::from(y));
        }
        super::convex_hull(&verts)
    }

    /// Vertex enumeration using the Chebyshev centre as interior point.
    /// Intended for small systems.
    pub fn to_polytope_v(&self) -> Result<PolytopeV, GeometryError> {
        let normals: Vec<Vec<f64>> = self.halfspaces.iter().map(|h| h.normal.clone()).collect();
        let offsets: Vec<f64> = self.halfspaces.iter().map(|h| h.offset).collect();
        let (centre, radius) = chebyshev_center(&normals, &offsets).ok_or(GeometryError::Unbounded)?;
        if radius <= 1e-12 {
            return Err(GeometryError::EmptyInterior);
        }
        self.to_polytope_v_with_interior(&centre)
    }
}

fn normals_positively_span(hs: &[Halfspace]) -> bool {
    let Some(first) = hs.first() else {
        return false;
    };
    let d = first.normal.len();
    if hs.len() < d + 1 {
        return false;
    }
    if d == 1 {
        return hs.iter().any(|h| h.normal[0] > 0.0) && hs.iter().any(|h| h.normal[0] < 0.0);
    }
    let normals: Vec<&[f64]> = hs.iter().map(|h| h.normal.as_slice()).collect();
    match quickhull(&normals) {
        // The origin must be strictly inside the hull of the normals.
        Ok(raw) => raw.facets.iter().all(|f| f.offset > 1e-9),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::super::convex_hull;
    use super::*;

    fn square() -> PolytopeV {
        let p: Vec<Point> = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]
            .iter()
            .map(|c| Point::from(*c))
            .collect();
        convex_hull(&p).unwrap()
    }

    #[test]
    fn square_basics() {
        let s = square();
        assert_eq!(s.vertices().len(), 4);
        assert_eq!(s.facets().len(), 4);
        assert!((s.volume() - 1.0).abs() < 1e-14);
        let h = s.halfspaces();
        assert!(h.contains(&[0.5, 0.5]));
        assert!(!h.contains(&[2.0, 0.0]));
        assert!(h.contains(&[1.0, 0.5]));
    }

    #[test]
    fn cube_facets_are_merged() {
        let mut p = Vec::new();
        for i in 0..8 {
            p.push(Point::from(vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]));
        }
        let c = convex_hull(&p).unwrap();
        assert_eq!(c.facets().len(), 6);
        assert!(c.facets().iter().all(|f| f.vertices.len() == 4));
        assert!((c.volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn h_to_v_square() {
        let h = PolytopeH::new(vec![
            (vec![1.0, 0.0], 1.0),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, 2.0], 2.0),
            (vec![0.0, -1.0], 0.0),
            (vec![1.0, 1.0], 5.0),
        ])
        .unwrap();
        assert!(h.bounded);
        let v = h.to_polytope_v().unwrap();
        assert_eq!(v.vertices().len(), 4);
        assert!((v.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let h = PolytopeH::new(vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0)]).unwrap();
        assert!(!h.bounded);
    }
}

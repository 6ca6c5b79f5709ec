use super::linalg::{factorial, simplex_det};
use super::Point;

/// A d-simplex given by `d+1` indices into a vertex store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    pub vertex_indices: Vec<usize>,
}

impl Simplex {
    pub fn new(vertex_indices: Vec<usize>) -> Self {
        Simplex { vertex_indices }
    }
}

/// Simplices over a shared vertex store with pairwise disjoint interiors.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub vertices: Vec<Point>,
    pub simplices: Vec<Simplex>,
}

impl Triangulation {
    pub fn new(vertices: Vec<Point>, simplices: Vec<Simplex>) -> Self {
        Triangulation { vertices, simplices }
    }

    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, |p| p.dim())
    }

    pub fn simplex_points(&self, s: &Simplex) -> Vec<&[f64]> {
        s.vertex_indices.iter().map(|&i| self.vertices[i].coords()).collect()
    }

    pub fn simplex_volume(&self, s: &Simplex) -> f64 {
        simplex_det(&self.simplex_points(s)).abs() / factorial(self.dim())
    }

    /// Sum of simplex volumes.
    pub fn volume(&self) -> f64 {
        self.simplices.iter().map(|s| self.simplex_volume(s)).sum()
    }
}

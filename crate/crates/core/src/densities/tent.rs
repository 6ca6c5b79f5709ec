//! Tent densities: `exp` of the least concave majorant of heights placed at
//! base points, normalised by `log_normalizer`.

use std::fmt::Write;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{exp_affine_integral, DensityError};
use crate::geometry::io::{parse_header, read_polytope, write_reals, LineReader};
use crate::geometry::linalg::{factorial, simplex_det};
use crate::geometry::{
    convex_hull, upper_hull_triangulation, write_polytope, CellLocator, GeometryError, Point, PolytopeV, Simplex,
    Triangulation,
};

/// Sampling pieces whose rejection acceptance falls below this are bisected.
const MIN_ACCEPTANCE: f64 = 0.01;

#[derive(Debug, Clone)]
struct Piece {
    pts: Vec<f64>,
    vals: Vec<f64>,
    vmax: f64,
}

#[derive(Debug, Clone)]
struct Sampler {
    pieces: Vec<Piece>,
    cumulative: Vec<f64>,
    acceptance: f64,
}

#[derive(Debug, Clone)]
pub struct TentDensity {
    base_points: Vec<Point>,
    heights: Vec<f64>,
    cells: Triangulation,
    support: PolytopeV,
    log_normalizer: f64,
    locator: CellLocator,
    cell_mass: Vec<f64>,
    sampler: OnceLock<Sampler>,
}

impl TentDensity {
    /// Tent over the least concave majorant of `(points[i], heights[i])`,
    /// normalised to unit mass.
    pub fn new(points: Vec<Point>, heights: Vec<f64>) -> Result<Self, DensityError> {
        if points.len() != heights.len() {
            return Err(DensityError::DimensionMismatch { expected: points.len(), got: heights.len() });
        }
        let lifted: Vec<(Point, f64)> = points.iter().cloned().zip(heights.iter().cloned()).collect();
        let upper = upper_hull_triangulation(&lifted)?;
        let mut t = TentDensity::from_cells(points, heights, upper.triangulation.simplices, 0.0)?;
        t.log_normalizer = t.cell_mass.iter().sum::<f64>().ln();
        Ok(t)
    }

    /// Assembles a tent from explicit cells. `heights` at cell vertices
    /// define the log-density; the caller is responsible for concavity.
    pub fn from_cells(
        points: Vec<Point>,
        heights: Vec<f64>,
        cells: Vec<Simplex>,
        log_normalizer: f64,
    ) -> Result<Self, DensityError> {
        if points.len() != heights.len() {
            return Err(DensityError::DimensionMismatch { expected: points.len(), got: heights.len() });
        }
        if heights.iter().any(|h| !h.is_finite()) || !log_normalizer.is_finite() {
            return Err(DensityError::NonFinite);
        }
        let support = convex_hull(&points)?;
        let cells = Triangulation::new(points.clone(), cells);
        let cell_mass = cells
            .simplices
            .iter()
            .map(|s| {
                let v: Vec<f64> = s.vertex_indices.iter().map(|&i| heights[i]).collect();
                exp_affine_integral(&cells.simplex_points(s), &v).unwrap_or(0.0)
            })
            .collect();
        let locator = CellLocator::new(&cells);
        Ok(TentDensity {
            base_points: points,
            heights,
            cells,
            support,
            log_normalizer,
            locator,
            cell_mass,
            sampler: OnceLock::new(),
        })
    }

    /// The same density with heights shifted so that `log_normalizer` is 0.
    pub fn normalized(self) -> Self {
        let c = self.log_normalizer;
        let scale = (-c).exp();
        TentDensity {
            heights: self.heights.iter().map(|h| h - c).collect(),
            cell_mass: self.cell_mass.iter().map(|m| m * scale).collect(),
            log_normalizer: 0.0,
            sampler: OnceLock::new(),
            ..self
        }
    }

    pub fn dim(&self) -> usize {
        self.base_points[0].dim()
    }

    pub fn base_points(&self) -> &[Point] {
        &self.base_points
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn cells(&self) -> &Triangulation {
        &self.cells
    }

    pub fn support(&self) -> &PolytopeV {
        &self.support
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// `∫ exp(h - log_normalizer)`.
    pub fn total_mass(&self) -> f64 {
        self.cell_mass.iter().sum::<f64>() * (-self.log_normalizer).exp()
    }

    /// Indices of base points that are vertices of some cell.
    pub fn vertex_indices(&self) -> Vec<usize> {
        let mut used = vec![false; self.base_points.len()];
        for s in &self.cells.simplices {
            for &v in &s.vertex_indices {
                used[v] = true;
            }
        }
        (0..used.len()).filter(|&i| used[i]).collect()
    }

    /// Value of the majorant (before normalisation) at `x`, `-inf` outside
    /// the support.
    pub fn majorant(&self, x: &[f64]) -> f64 {
        match self.locator.locate(x) {
            Some(loc) => {
                let s = &self.cells.simplices[loc.cell].vertex_indices;
                s.iter().zip(&loc.bary).map(|(&i, l)| l * self.heights[i]).sum()
            }
            None => f64::NEG_INFINITY,
        }
    }

    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        self.majorant(x) - self.log_normalizer
    }

    pub fn ln_max(&self) -> f64 {
        self.cells
            .simplices
            .iter()
            .flat_map(|s| s.vertex_indices.iter())
            .map(|&i| self.heights[i])
            .fold(f64::NEG_INFINITY, f64::max)
            - self.log_normalizer
    }

    fn sampler(&self) -> &Sampler {
        self.sampler.get_or_init(|| {
            let d = self.dim();
            let mut pieces = Vec::new();
            for (s, &m) in self.cells.simplices.iter().zip(&self.cell_mass) {
                if m <= 0.0 {
                    continue;
                }
                let pts: Vec<f64> = s.vertex_indices.iter().flat_map(|&i| self.base_points[i].iter().cloned()).collect();
                let vals: Vec<f64> = s.vertex_indices.iter().map(|&i| self.heights[i] - self.log_normalizer).collect();
                push_piece(&mut pieces, d, pts, vals, 0);
            }
            let mut acc = 0.0;
            let mut envelope = 0.0;
            let cumulative = pieces
                .iter()
                .map(|p| {
                    let (mass, vol) = piece_mass(d, p);
                    envelope += vol * p.vmax.exp();
                    acc += mass;
                    acc
                })
                .collect();
            Sampler { pieces, cumulative, acceptance: acc / envelope }
        })
    }

    /// Expected rejection acceptance rate of the sampler.
    pub fn sampling_acceptance(&self) -> f64 {
        self.sampler().acceptance
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Point> {
        let d = self.dim();
        let s = self.sampler();
        let total = *s.cumulative.last().expect("tent has no mass");
        let mut out = Vec::with_capacity(count);
        let mut w = vec![0.0; d + 1];
        while out.len() < count {
            let r = rng.random::<f64>() * total;
            let p = &s.pieces[s.cumulative.partition_point(|&a| a <= r).min(s.pieces.len() - 1)];
            loop {
                let mut sum = 0.0;
                for wi in w.iter_mut() {
                    *wi = Exp1.sample(rng);
                    sum += *wi;
                }
                let l: f64 = w.iter().zip(&p.vals).map(|(a, v)| a / sum * v).sum();
                if rng.random::<f64>() < (l - p.vmax).exp() {
                    let mut x = vec![0.0; d];
                    for (a, wi) in w.iter().enumerate() {
                        for k in 0..d {
                            x[k] += wi / sum * p.pts[a * d + k];
                        }
                    }
                    out.push(Point::new(x));
                    break;
                }
            }
        }
        out
    }

    /// `vol({x : f(x) >= y})` as the hull of cell-edge crossings.
    pub fn superlevel_volume(&self, y: f64) -> f64 {
        let t = y.ln() + self.log_normalizer;
        let d = self.dim();
        let mut pts: Vec<Point> = Vec::new();
        let mut all_above = true;
        for s in &self.cells.simplices {
            let idx = &s.vertex_indices;
            for (a, &i) in idx.iter().enumerate() {
                let hi = self.heights[i];
                if hi >= t {
                    pts.push(self.base_points[i].clone());
                } else {
                    all_above = false;
                }
                for &j in &idx[a + 1..] {
                    let hj = self.heights[j];
                    if (hi - t) * (hj - t) < 0.0 {
                        let u = (t - hi) / (hj - hi);
                        let (p, q) = (&self.base_points[i], &self.base_points[j]);
                        pts.push(Point::new((0..d).map(|k| p[k] + u * (q[k] - p[k])).collect()));
                    }
                }
            }
        }
        if all_above {
            return self.support.volume();
        }
        match convex_hull(&pts) {
            Ok(p) => p.volume(),
            Err(_) => 0.0,
        }
    }
}

fn piece_mass(d: usize, p: &Piece) -> (f64, f64) {
    let pts: Vec<&[f64]> = p.pts.chunks(d).collect();
    let det = simplex_det(&pts).abs();
    (det * super::divided_difference_exp(&p.vals), det / factorial(d))
}

fn push_piece(out: &mut Vec<Piece>, d: usize, pts: Vec<f64>, vals: Vec<f64>, depth: usize) {
    let vmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let piece = Piece { pts, vals, vmax };
    let (mass, vol) = piece_mass(d, &piece);
    if depth >= 40 || vol <= 0.0 || mass / (vol * vmax.exp()) >= MIN_ACCEPTANCE {
        out.push(piece);
        return;
    }
    // Bisect the longest edge; the midpoint value is the average.
    let k = d + 1;
    let (mut ba, mut bb, mut best) = (0, 1, -1.0);
    for a in 0..k {
        for b in a + 1..k {
            let l: f64 = (0..d).map(|c| (piece.pts[a * d + c] - piece.pts[b * d + c]).powi(2)).sum();
            if l > best {
                (ba, bb, best) = (a, b, l);
            }
        }
    }
    let mid: Vec<f64> = (0..d).map(|c| 0.5 * (piece.pts[ba * d + c] + piece.pts[bb * d + c])).collect();
    let mv = 0.5 * (piece.vals[ba] + piece.vals[bb]);
    for replaced in [ba, bb] {
        let mut pts = piece.pts.clone();
        let mut vals = piece.vals.clone();
        pts[replaced * d..(replaced + 1) * d].copy_from_slice(&mid);
        vals[replaced] = mv;
        push_piece(out, d, pts, vals, depth + 1);
    }
}

/// Serialises a tent: the support polytope, then `points`, `heights` and
/// `cells` blocks and the log normaliser.
pub fn write_tent(t: &TentDensity) -> String {
    let mut out = write_polytope(&t.support);
    writeln!(out, "points {}", t.base_points.len()).unwrap();
    for p in &t.base_points {
        write_reals(&mut out, p);
        out.push('\n');
    }
    writeln!(out, "heights {}", t.heights.len()).unwrap();
    for h in &t.heights {
        write_reals(&mut out, &[*h]);
        out.push('\n');
    }
    writeln!(out, "cells {}", t.cells.simplices.len()).unwrap();
    for s in &t.cells.simplices {
        let row: Vec<String> = s.vertex_indices.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out.push_str("log_normalizer ");
    write_reals(&mut out, &[t.log_normalizer]);
    out.push('\n');
    out
}

/// Parses [`write_tent`] output. Any trailing `key=value` lines are
/// returned alongside the density.
pub fn parse_tent(text: &str) -> Result<(TentDensity, Vec<(String, String)>), DensityError> {
    let perr = |line: usize, msg: &str| DensityError::Geometry(GeometryError::Parse { line, msg: msg.into() });
    let mut r = LineReader::new(text);
    let support = read_polytope(&mut r)?;
    let d = support.dim();
    let (line, l) = r.next_line()?;
    let n = parse_header(line, l, &["points"])?[0];
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(Point::new(r.reals(d)?));
    }
    let (line, l) = r.next_line()?;
    if parse_header(line, l, &["heights"])?[0] != n {
        return Err(perr(line, "heights count differs from points count"));
    }
    let mut heights = Vec::with_capacity(n);
    for _ in 0..n {
        heights.push(r.reals(1)?[0]);
    }
    let (line, l) = r.next_line()?;
    let m = parse_header(line, l, &["cells"])?[0];
    let mut cells = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, l) = r.next_line()?;
        let idx: Result<Vec<usize>, _> = l.split_whitespace().map(|t| t.parse::<usize>()).collect();
        let idx = idx.map_err(|e| perr(line, &e.to_string()))?;
        if idx.len() != d + 1 || idx.iter().any(|&i| i >= n) {
            return Err(perr(line, "bad cell row"));
        }
        cells.push(Simplex::new(idx));
    }
    let (line, l) = r.next_line()?;
    let ln = match l.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["log_normalizer", v] => v.parse::<f64>().map_err(|e| perr(line, &e.to_string()))?,
        _ => return Err(perr(line, "expected log_normalizer")),
    };
    let mut footer = Vec::new();
    while r.peek().is_some() {
        let (line, l) = r.next_line()?;
        if l == "diagnostics" {
            continue;
        }
        let (k, v) = l.split_once('=').ok_or_else(|| perr(line, "expected key=value"))?;
        footer.push((k.trim().to_string(), v.trim().to_string()));
    }
    let t = TentDensity::from_cells(points, heights, cells, ln)?;
    Ok((t, footer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn uniform_interval() -> TentDensity {
        TentDensity::new(vec![Point::from([0.0]), Point::from([1.0])], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn flat_tent_on_unit_interval() {
        let t = uniform_interval();
        assert_eq!(t.ln_pdf(&[0.5]), 0.0);
        assert_eq!(t.ln_pdf(&[2.0]), f64::NEG_INFINITY);
        assert!((t.total_mass() - 1.0).abs() < 1e-15);
        assert!((t.superlevel_volume(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(t.superlevel_volume(1.5), 0.0);
    }

    #[test]
    fn majorant_ignores_low_points() {
        let pts = vec![Point::from([0.0]), Point::from([0.5]), Point::from([1.0])];
        let t = TentDensity::new(pts, vec![0.0, -1.0, 0.0]).unwrap();
        assert_eq!(t.cells().simplices.len(), 1);
        assert!(t.majorant(&[0.5]).abs() < 1e-15);
        assert_eq!(t.vertex_indices(), vec![0, 2]);
    }

    #[test]
    fn normalisation_of_a_triangle_tent() {
        let pts = vec![Point::from([0.0]), Point::from([0.5]), Point::from([1.0])];
        let t = TentDensity::new(pts, vec![0.0, 2.0, 0.0]).unwrap().normalized();
        assert_eq!(t.log_normalizer(), 0.0);
        assert!((t.total_mass() - 1.0).abs() < 1e-14);
        // Mass on [0, 0.5] is half by symmetry.
        let z = ((2f64.exp() - 1.0) / 2.0 * 2.0 / 2.0).ln();
        assert!((t.ln_pdf(&[0.0]) + z).abs() < 1e-14);
    }

    #[test]
    fn uniform_tent_samples_pass_ks() {
        let t = uniform_interval();
        let mut rng = stream(5, 1);
        let n = 5000;
        let mut xs: Vec<f64> = t.sample(&mut rng, n).iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - x))
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / (n as f64).sqrt(), "{ks}");
    }

    #[test]
    fn steep_cells_are_bisected() {
        let pts = vec![Point::from([0.0]), Point::from([1.0])];
        let t = TentDensity::new(pts, vec![0.0, -40.0]).unwrap();
        assert!(t.sampling_acceptance() >= MIN_ACCEPTANCE);
        let mut rng = stream(1, 1);
        let s = t.sample(&mut rng, 4000);
        let mean = s.iter().map(|p| p[0]).sum::<f64>() / 4000.0;
        // Exponential with rate 40 truncated to [0, 1].
        assert!((mean - 1.0 / 40.0).abs() < 4.0 * (1.0 / 40.0) / 4000f64.sqrt());
    }

    #[test]
    fn round_trip() {
        let pts = vec![
            Point::from([0.0, 0.0]),
            Point::from([1.0, 0.0]),
            Point::from([0.0, 1.0]),
            Point::from([0.3, 0.3]),
        ];
        let t = TentDensity::new(pts, vec![-1.0, -0.5, -0.25, 0.1]).unwrap();
        let mut text = write_tent(&t);
        text.push_str("diagnostics\niterations=4\nobjective=1.5\n");
        let (u, footer) = parse_tent(&text).unwrap();
        assert_eq!(u.heights(), t.heights());
        assert_eq!(u.log_normalizer(), t.log_normalizer());
        assert_eq!(u.cells().simplices, t.cells().simplices);
        assert_eq!(footer[0], ("iterations".to_string(), "4".to_string()));
        assert_eq!(write_tent(&u), write_tent(&t));
    }
}

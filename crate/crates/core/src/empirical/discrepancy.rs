//! `sup_{A in family} |f0(A) - f_n(A)|`: exact where a sweep is possible,
//! a max over random family members (a lower bound) otherwise.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::mass::MassOracle;
use super::{EmpiricalError, EmpiricalMeasure, Region, SetFamilySpec, TrueMeasure};
use crate::geometry::{convex_hull, linalg, inner_approx, ConvexPolygon, Halfspace, Point};
use crate::rng::{derive_stream_id, stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyOptions {
    /// Random family members tried when no exact sweep exists.
    pub trials: usize,
    /// Reference draws for masses without a closed form.
    pub reference_draws: usize,
}

impl Default for DiscrepancyOptions {
    fn default() -> Self {
        DiscrepancyOptions { trials: 200, reference_draws: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub sup: f64,
    /// Standard error of the true mass of the witness (0 when exact).
    pub stderr: f64,
    /// The sup was taken over a random subfamily.
    pub lower_bound: bool,
    pub witness: String,
    pub sets_evaluated: usize,
}

struct Best {
    sup: f64,
    stderr: f64,
    witness: Option<Region>,
    count: usize,
}

impl Best {
    fn new() -> Self {
        Best { sup: 0.0, stderr: 0.0, witness: None, count: 0 }
    }

    fn offer(&mut self, dev: f64, stderr: f64, region: impl FnOnce() -> Region) {
        self.count += 1;
        if dev > self.sup || self.witness.is_none() {
            self.sup = dev;
            self.stderr = stderr;
            self.witness = Some(region());
        }
    }

    fn finish(self, lower_bound: bool) -> Discrepancy {
        Discrepancy {
            sup: self.sup,
            stderr: self.stderr,
            lower_bound,
            witness: self.witness.map_or_else(|| "none".into(), |r| r.describe()),
            sets_evaluated: self.count,
        }
    }
}

fn oracle<'a, R: Rng + ?Sized>(
    truth: TrueMeasure<'a>,
    probe: &Region,
    opts: &DiscrepancyOptions,
    rng: &mut R,
) -> MassOracle<'a> {
    let exact = MassOracle::exact_only(truth);
    if exact.has_closed_form(probe) {
        exact
    } else {
        MassOracle::new(truth, opts.reference_draws, rng)
    }
}

fn unit_halfspace(normal: &[f64], offset: f64) -> Halfspace {
    let n = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    Halfspace { normal: normal.iter().map(|v| v / n).collect(), offset: offset / n }
}

pub fn convex_discrepancy<R: Rng + ?Sized>(
    truth: TrueMeasure,
    em: &EmpiricalMeasure,
    fam: &SetFamilySpec,
    opts: &DiscrepancyOptions,
    rng: &mut R,
) -> Result<Discrepancy, EmpiricalError> {
    let d = truth.dim();
    if em.n() == 0 {
        return Ok(Best::new().finish(false));
    }
    if em.dim() != d {
        return Err(EmpiricalError::DimensionMismatch { expected: d, got: em.dim() });
    }
    fam.validate(d, em.n())?;
    match fam {
        SetFamilySpec::Single(region) => {
            let o = oracle(truth, region, opts, rng);
            let (p, se) = o.mass(region);
            let mut b = Best::new();
            b.offer((p - em.mass(region)).abs(), se, || region.clone());
            Ok(b.finish(false))
        }
        SetFamilySpec::Halfspaces => halfspaces(truth, em, opts, rng),
        SetFamilySpec::AxisBoxes => boxes(truth, em, opts, rng),
        SetFamilySpec::SubsetHulls { k } => Ok(random_members(truth, em, opts, rng, |rng, pts| {
            let k = *k;
            let idx = if k >= pts.len() { (0..pts.len()).collect() } else { sample_indices(rng, pts.len(), k).into_vec() };
            hull_region(pts, &idx, None)
        }, *k >= em.n())),
        SetFamilySpec::Polytopes { facets } => Ok(random_members(truth, em, opts, rng, |rng, pts| {
            random_polytope(rng, pts, *facets)
        }, false)),
        SetFamilySpec::Combos { levels, facets } => Ok(random_members(truth, em, opts, rng, |rng, pts| {
            let parts: Vec<Region> = (0..*levels).filter_map(|_| random_polytope(rng, pts, *facets)).collect();
            (!parts.is_empty()).then_some(Region::Union(parts))
        }, false)),
    }
}

/// Hull of `pts[idx]`, optionally reduced to `facets` facets.
fn hull_region(pts: &[Point], idx: &[usize], facets: Option<usize>) -> Option<Region> {
    let d = pts[0].dim();
    let sub: Vec<Point> = idx.iter().map(|&i| pts[i].clone()).collect();
    if d == 1 {
        let lo = sub.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = sub.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return Some(Region::Box { lo: vec![lo], hi: vec![hi] });
    }
    let mut hull = convex_hull(&sub).ok()?;
    if let Some(h) = facets {
        hull = inner_approx(&hull, h).ok()?.polytope;
    }
    Some(if d == 2 { Region::Polygon(ConvexPolygon::from_polytope(&hull)) } else { Region::Polytope(hull) })
}

fn random_polytope<R: Rng + ?Sized>(rng: &mut R, pts: &[Point], facets: usize) -> Option<Region> {
    let n = pts.len();
    let d = pts[0].dim();
    let k = rng.random_range((d + 1).min(n)..=n);
    let idx = sample_indices(rng, n, k).into_vec();
    hull_region(pts, &idx, if d == 1 { None } else { Some(facets) })
}

/// Max deviation over `opts.trials` random members (one when `single`).
fn random_members<R, G>(
    truth: TrueMeasure,
    em: &EmpiricalMeasure,
    opts: &DiscrepancyOptions,
    rng: &mut R,
    mut make: G,
    single: bool,
) -> Discrepancy
where
    R: Rng + ?Sized,
    G: FnMut(&mut R, &[Point]) -> Option<Region>,
{
    let pts = em.samples();
    let trials = if single { 1 } else { opts.trials };
    let members: Vec<Region> = (0..trials).filter_map(|_| make(rng, pts)).collect();
    let mut best = Best::new();
    let Some(first) = members.first() else { return best.finish(true) };
    let o = oracle(truth, first, opts, rng);
    for r in members {
        let (p, se) = o.mass(&r);
        best.offer((p - em.mass(&r)).abs(), se, || r);
    }
    // All members of a one-member search are exact only with a closed form.
    let exact = single && best.stderr == 0.0;
    best.finish(!exact)
}

fn halfspaces<R: Rng + ?Sized>(
    truth: TrueMeasure,
    em: &EmpiricalMeasure,
    opts: &DiscrepancyOptions,
    rng: &mut R,
) -> Result<Discrepancy, EmpiricalError> {
    let d = truth.dim();
    let probe = Region::Halfspace(unit_halfspace(&vec![1.0; d], 0.0));
    let o = oracle(truth, &probe, opts, rng);
    let exact = o.has_closed_form(&probe);
    match d {
        1 if exact => Ok(ks_1d(&o, em, false)),
        2 if exact => Ok(halfplane_sweep(&o, em)),
        _ => {
            // Hyperplanes through d random sample points.
            let pts = em.samples();
            let mut best = Best::new();
            if pts.len() < d {
                return Ok(best.finish(true));
            }
            for _ in 0..opts.trials {
                let idx = sample_indices(rng, pts.len(), d).into_vec();
                let Some(normal) = hyperplane_normal(pts, &idx) else { continue };
                let offset: f64 = normal.iter().zip(pts[idx[0]].coords()).map(|(a, b)| a * b).sum();
                for sign in [1.0, -1.0] {
                    let n: Vec<f64> = normal.iter().map(|v| sign * v).collect();
                    let r = Region::Halfspace(unit_halfspace(&n, sign * offset));
                    let (p, se) = o.mass(&r);
                    best.offer((p - em.mass(&r)).abs(), se, || r);
                }
            }
            Ok(best.finish(true))
        }
    }
}

fn hyperplane_normal(pts: &[Point], idx: &[usize]) -> Option<Vec<f64>> {
    let sel: Vec<&[f64]> = idx.iter().map(|&i| pts[i].coords()).collect();
    let n = linalg::hyperplane_normal(&sel);
    (n.iter().any(|v| *v != 0.0)).then_some(n)
}

/// Kolmogorov-Smirnov (halflines) or Kuiper (intervals) statistic.
fn ks_1d(o: &MassOracle, em: &EmpiricalMeasure, intervals: bool) -> Discrepancy {
    let n = em.n() as f64;
    let mut xs: Vec<f64> = em.samples().iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    let (mut plus, mut minus) = ((0.0f64, 0.0), (0.0f64, 0.0));
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let f = o.cdf_1d(v).unwrap_or(f64::NAN);
        let (before, after) = (i as f64 / n, j as f64 / n);
        if after - f > plus.0 {
            plus = (after - f, v);
        }
        if f - before > minus.0 {
            minus = (f - before, v);
        }
        i = j;
    }
    if intervals {
        let (a, b) = (minus.1.min(plus.1), minus.1.max(plus.1));
        return Discrepancy {
            sup: plus.0 + minus.0,
            stderr: 0.0,
            lower_bound: false,
            witness: Region::Box { lo: vec![a], hi: vec![b] }.describe(),
            sets_evaluated: xs.len(),
        };
    }
    let (sup, at) = if plus.0 >= minus.0 { plus } else { minus };
    Discrepancy {
        sup,
        stderr: 0.0,
        lower_bound: false,
        witness: Region::Halfspace(Halfspace { normal: vec![1.0], offset: at }).describe(),
        sets_evaluated: xs.len(),
    }
}

/// Every halfplane bounded by a line through two sample points, with the
/// points on the line counted in or out. For each pivot the others are
/// sorted by angle and a rotating pointer counts the open left side.
fn halfplane_sweep(o: &MassOracle, em: &EmpiricalMeasure) -> Discrepancy {
    let pts: Vec<[f64; 2]> = em.samples().iter().map(|p| [p[0], p[1]]).collect();
    let n = pts.len();
    let nf = n as f64;
    let mut best = Best::new();
    let mut best_line = None;
    let mut ang: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, p) in pts.iter().enumerate() {
        ang.clear();
        ang.extend(pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, q)| ((q[1] - p[1]).atan2(q[0] - p[0]), j)));
        ang.sort_by(|a, b| a.0.total_cmp(&b.0));
        let m = ang.len();
        let ext = |k: usize| if k < m { ang[k].0 } else { ang[k - m].0 + 2.0 * std::f64::consts::PI };
        let mut ptr = 0;
        for a in 0..m {
            ptr = ptr.max(a + 1);
            while ptr < a + m && ext(ptr) < ang[a].0 + std::f64::consts::PI {
                ptr += 1;
            }
            let left = (ptr - a - 1) as f64;
            let q = pts[ang[a].1];
            let normal = [-(q[1] - p[1]), q[0] - p[0]];
            let h = unit_halfspace(&normal, normal[0] * p[0] + normal[1] * p[1]);
            let (right, _) = o.mass(&Region::Halfspace(h));
            let f_left = 1.0 - right;
            for k in 0..3 {
                let dev = (f_left - (left + k as f64) / nf).abs();
                if dev > best.sup || best.count == 0 {
                    best_line = Some((i, ang[a].1));
                }
                best.count += 1;
                if dev > best.sup {
                    best.sup = dev;
                }
            }
        }
    }
    let witness = best_line.map(|(i, j)| {
        let (p, q) = (pts[i], pts[j]);
        let normal = [-(q[1] - p[1]), q[0] - p[0]];
        Region::Halfspace(unit_halfspace(&normal, normal[0] * p[0] + normal[1] * p[1]))
    });
    Discrepancy {
        sup: best.sup,
        stderr: 0.0,
        lower_bound: false,
        witness: witness.map_or_else(|| "none".into(), |r| r.describe()),
        sets_evaluated: best.count,
    }
}

fn boxes<R: Rng + ?Sized>(
    truth: TrueMeasure,
    em: &EmpiricalMeasure,
    opts: &DiscrepancyOptions,
    rng: &mut R,
) -> Result<Discrepancy, EmpiricalError> {
    let d = truth.dim();
    let probe = Region::Box { lo: vec![-1.0; d], hi: vec![1.0; d] };
    let o = oracle(truth, &probe, opts, rng);
    if d == 1 && o.has_closed_form(&probe) {
        return Ok(ks_1d(&o, em, true));
    }
    // Boxes spanned by random pairs of sample points.
    let pts = em.samples();
    let mut best = Best::new();
    for _ in 0..opts.trials {
        let (a, b) = (rng.random_range(0..pts.len()), rng.random_range(0..pts.len()));
        let lo: Vec<f64> = (0..d).map(|k| pts[a][k].min(pts[b][k])).collect();
        let hi: Vec<f64> = (0..d).map(|k| pts[a][k].max(pts[b][k])).collect();
        let r = Region::Box { lo, hi };
        let (p, se) = o.mass(&r);
        best.offer((p - em.mass(&r)).abs(), se, || r);
    }
    Ok(best.finish(true))
}

/// Mean sup-deviation at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Per-replicate sups, in replicate order.
    pub values: Vec<f64>,
}

/// Replicate `r` at size `n` draws from stream `(seed, [n, r])`.
pub fn vc_deviation_curve(
    truth: TrueMeasure,
    fam: &SetFamilySpec,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
    opts: &DiscrepancyOptions,
) -> Result<Vec<CurvePoint>, EmpiricalError> {
    let one = |n: usize, r: usize| -> Result<f64, EmpiricalError> {
        let mut rng = stream(seed, derive_stream_id(&[n as u64, r as u64]));
        let em = EmpiricalMeasure::new(truth.sample(&mut rng, n));
        Ok(convex_discrepancy(truth, &em, fam, opts, &mut rng)?.sup)
    };
    let mut out = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        #[cfg(feature = "parallel")]
        let values: Result<Vec<f64>, _> = (0..replicates).into_par_iter().map(|r| one(n, r)).collect();
        #[cfg(not(feature = "parallel"))]
        let values: Result<Vec<f64>, _> = (0..replicates).map(|r| one(n, r)).collect();
        let values = values?;
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        out.push(CurvePoint { n, mean, stderr: (var / k).sqrt(), values });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::DensityModel;
    use crate::rng::stream;

    #[test]
    fn single_point_ks() {
        let f = DensityModel::uniform_box(&[0.0], &[1.0]).unwrap();
        let em = EmpiricalMeasure::new(vec![Point::from([0.5])]);
        let mut rng = stream(1, 1);
        let r = convex_discrepancy((&f).into(), &em, &SetFamilySpec::Halfspaces, &Default::default(), &mut rng).unwrap();
        assert!((r.sup - 0.5).abs() < 1e-15);
        assert!(!r.lower_bound);
        let all = convex_discrepancy((&f).into(), &em, &SetFamilySpec::Single(Region::All), &Default::default(), &mut rng).unwrap();
        assert_eq!(all.sup, 0.0);
    }

    #[test]
    fn sweep_agrees_with_brute_force() {
        let f = DensityModel::standard_gaussian(2);
        let mut rng = stream(1, 2);
        let em = EmpiricalMeasure::new(f.sample(&mut rng, 25));
        let o = MassOracle::exact_only((&f).into());
        let fast = halfplane_sweep(&o, &em).sup;
        let pts = em.samples();
        let mut slow = 0.0f64;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i == j {
                    continue;
                }
                let normal = [-(pts[j][1] - pts[i][1]), pts[j][0] - pts[i][0]];
                let h = unit_halfspace(&normal, normal[0] * pts[i][0] + normal[1] * pts[i][1]);
                let f_right = o.mass(&Region::Halfspace(h.clone())).0;
                let s = |x: &Point| h.normal[0] * x[0] + h.normal[1] * x[1] - h.offset;
                let strict = pts.iter().filter(|x| s(x) < -1e-12).count();
                for k in 0..3 {
                    slow = slow.max((f_right - (strict + k) as f64 / pts.len() as f64).abs());
                }
            }
        }
        assert!((fast - slow).abs() < 1e-12, "{fast} {slow}");
    }

    #[test]
    fn kuiper_dominates_ks() {
        let f = DensityModel::standard_gaussian(1);
        let mut rng = stream(1, 3);
        let em = EmpiricalMeasure::new(f.sample(&mut rng, 200));
        let ks = convex_discrepancy((&f).into(), &em, &SetFamilySpec::Halfspaces, &Default::default(), &mut rng).unwrap();
        let kp = convex_discrepancy((&f).into(), &em, &SetFamilySpec::AxisBoxes, &Default::default(), &mut rng).unwrap();
        assert!(kp.sup >= ks.sup && kp.sup <= 2.0 * ks.sup);
    }
}

//! The multi-level sandwich `C^in ⊆ C_L ⊆ C^out` around a convex set `C`
//! cut by the superlevel sets `S_i = {f0 >= M e^{-i}}`, in the plane.

use rand::Rng;

use super::EmpiricalError;
use crate::bounds::{sandwich_facets, sandwich_levels, warmup_facets, ScheduleParams};
use crate::densities::DensityModel;
use crate::geometry::{inner_approx, outer_approx, ConvexPolygon, PolytopeV};

/// Vertices used to polygonise curved level sets.
pub const LEVEL_VERTICES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelReport {
    pub level: usize,
    /// Area of `C_i = C ∩ S_i`.
    pub level_area: f64,
    pub inner_area: f64,
    pub outer_area: f64,
}

#[derive(Debug, Clone)]
pub struct SandwichResult {
    pub levels: usize,
    pub facets: usize,
    /// `delta` of the schedule.
    pub delta: f64,
    /// Facet budgets of the approximation bound with `kappa = 1`.
    pub kappa_one_facets: f64,
    pub warmup_facets: f64,
    c_levels: Vec<ConvexPolygon>,
    inner: Vec<ConvexPolygon>,
    outer: Vec<ConvexPolygon>,
    level_inner: Vec<ConvexPolygon>,
    pub reports: Vec<LevelReport>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichVerification {
    pub probes: usize,
    /// Probes in `C^in \ C_L` or in `C_L \ C^out`.
    pub violations: usize,
    /// `f0(C_L \ C^in)`
    pub gap_inner: f64,
    pub gap_inner_stderr: f64,
    /// `f0(C^out \ C_L)`
    pub gap_outer: f64,
    pub gap_outer_stderr: f64,
}

impl SandwichVerification {
    pub fn gaps_below(&self, threshold: f64) -> bool {
        self.gap_inner < threshold + 3.0 * self.gap_inner_stderr && self.gap_outer < threshold + 3.0 * self.gap_outer_stderr
    }
}

fn level_polygon(f0: &DensityModel, i: usize) -> Result<ConvexPolygon, EmpiricalError> {
    match f0 {
        DensityModel::Gaussian(g) => {
            let l = g.chol();
            let a = [l[(0, 0)], l[(0, 1)], l[(1, 0)], l[(1, 1)]];
            Ok(ConvexPolygon::inscribed_ellipse([g.mean()[0], g.mean()[1]], a, (2.0 * i as f64).sqrt(), LEVEL_VERTICES))
        }
        DensityModel::UniformPolytope(u) => Ok(ConvexPolygon::from_polytope(u.polytope())),
        other => Err(EmpiricalError::UnsupportedDensity(other.label())),
    }
}

fn to_polytope(p: &ConvexPolygon) -> Option<PolytopeV> {
    if p.is_empty() || p.area() <= 0.0 {
        return None;
    }
    p.to_polytope().ok()
}

/// `c = None` is the empty set.
pub fn sandwich_construct(
    f0: &DensityModel,
    c: Option<&PolytopeV>,
    schedule: &ScheduleParams,
    facets: usize,
) -> Result<SandwichResult, EmpiricalError> {
    if f0.dim() != 2 {
        return Err(EmpiricalError::UnsupportedDimension(f0.dim()));
    }
    if c.is_some_and(|c| c.dim() != 2) {
        return Err(EmpiricalError::DimensionMismatch { expected: 2, got: c.unwrap().dim() });
    }
    if facets < 3 {
        return Err(crate::geometry::GeometryError::InfeasibleBudget { budget: facets, min: 3 }.into());
    }
    let levels = sandwich_levels(schedule.n, schedule.tau) as usize;
    let cuts = c.map(|c| ConvexPolygon::from_polytope(c).halfspaces());
    let mut out = SandwichResult {
        levels,
        facets,
        delta: schedule.delta,
        kappa_one_facets: sandwich_facets(2, schedule.delta, 1.0),
        warmup_facets: warmup_facets(schedule, 1.0),
        c_levels: Vec::with_capacity(levels),
        inner: Vec::with_capacity(levels),
        outer: Vec::with_capacity(levels),
        level_inner: Vec::with_capacity(levels),
        reports: Vec::with_capacity(levels),
    };
    for i in 1..=levels {
        let s = level_polygon(f0, i)?;
        let ci = match &cuts {
            Some(h) => s.clip_all(h),
            None => ConvexPolygon::empty(),
        };
        let (inner, outer) = match to_polytope(&ci) {
            Some(p) => {
                let inn = ConvexPolygon::from_polytope(&inner_approx(&p, facets)?.polytope);
                let out = ConvexPolygon::from_polytope(&outer_approx(&p, facets)?.polytope.to_polytope_v()?);
                (inn, out)
            }
            None => (ConvexPolygon::empty(), ConvexPolygon::empty()),
        };
        let s_poly = to_polytope(&s).ok_or(EmpiricalError::UnsupportedDensity("empty level set".into()))?;
        out.level_inner.push(ConvexPolygon::from_polytope(&inner_approx(&s_poly, facets)?.polytope));
        out.reports.push(LevelReport { level: i, level_area: ci.area(), inner_area: inner.area(), outer_area: outer.area() });
        out.c_levels.push(ci);
        out.inner.push(inner);
        out.outer.push(outer);
    }
    Ok(out)
}

impl SandwichResult {
    pub fn in_c_in(&self, x: [f64; 2]) -> bool {
        self.inner.iter().any(|p| p.contains(x))
    }

    pub fn in_c_l(&self, x: [f64; 2]) -> bool {
        self.c_levels.last().is_some_and(|p| p.contains(x))
    }

    /// `x in ∪_i (P_i^out \ ∪_{j<i} P_j^S)`
    pub fn in_c_out(&self, x: [f64; 2]) -> bool {
        for (p_out, p_s) in self.outer.iter().zip(&self.level_inner) {
            if p_out.contains(x) {
                return true;
            }
            if p_s.contains(x) {
                // Every later term removes P_j^S for this j.
                return false;
            }
        }
        false
    }

    /// Checks nesting on `probes` draws from `f0` plus `probes` uniform
    /// draws over a box around the outermost level, and estimates both gaps
    /// from the `f0` draws.
    pub fn verify<R: Rng + ?Sized>(&self, f0: &DensityModel, probes: usize, rng: &mut R) -> SandwichVerification {
        let mut violations = 0;
        let mut check = |x: [f64; 2]| -> (bool, bool, bool) {
            let (a, b, c) = (self.in_c_in(x), self.in_c_l(x), self.in_c_out(x));
            if (a && !b) || (b && !c) {
                violations += 1;
            }
            (a, b, c)
        };
        let (mut miss_in, mut extra_out) = (0usize, 0usize);
        for p in f0.sample(rng, probes) {
            let (a, b, c) = check([p[0], p[1]]);
            miss_in += (b && !a) as usize;
            extra_out += (c && !b) as usize;
        }
        let outer = match self.level_inner.last() {
            Some(p) if !p.is_empty() => p.vertices().to_vec(),
            _ => vec![[-1.0, -1.0], [1.0, 1.0]],
        };
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &outer {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        for k in 0..2 {
            let pad = 0.1 * (hi[k] - lo[k]);
            lo[k] -= pad;
            hi[k] += pad;
        }
        for _ in 0..probes {
            let x = [lo[0] + (hi[0] - lo[0]) * rng.random::<f64>(), lo[1] + (hi[1] - lo[1]) * rng.random::<f64>()];
            check(x);
        }
        let m = probes.max(1) as f64;
        let (gi, go) = (miss_in as f64 / m, extra_out as f64 / m);
        SandwichVerification {
            probes: 2 * probes,
            violations,
            gap_inner: gi,
            gap_inner_stderr: (gi * (1.0 - gi) / m).sqrt(),
            gap_outer: go,
            gap_outer_stderr: (go * (1.0 - go) / m).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::schedule;
    use crate::geometry::{convex_hull, Point};
    use crate::rng::stream;

    fn square(lo: f64, hi: f64) -> PolytopeV {
        convex_hull(&[Point::from([lo, lo]), Point::from([hi, lo]), Point::from([hi, hi]), Point::from([lo, hi])]).unwrap()
    }

    #[test]
    fn empty_set_has_empty_sandwich() {
        let f = DensityModel::standard_gaussian(2);
        let s = schedule(100, 0.1, 0.1, 2).unwrap();
        let sw = sandwich_construct(&f, None, &s, 8).unwrap();
        let mut rng = stream(9, 0);
        let v = sw.verify(&f, 2000, &mut rng);
        assert_eq!((v.violations, v.gap_inner, v.gap_outer), (0, 0.0, 0.0));
        assert!(!sw.in_c_out([0.0, 0.0]) && !sw.in_c_in([0.0, 0.0]));
    }

    #[test]
    fn coarse_budget_still_nests() {
        let f = DensityModel::standard_gaussian(2);
        let s = schedule(100, 0.1, 0.1, 2).unwrap();
        let sw = sandwich_construct(&f, Some(&square(-1.0, 3.0)), &s, 6).unwrap();
        assert_eq!(sw.levels, 26);
        let mut rng = stream(9, 1);
        let v = sw.verify(&f, 20_000, &mut rng);
        assert_eq!(v.violations, 0);
        assert!(v.gap_outer > 0.0);
    }

    #[test]
    fn non_planar_is_refused() {
        let s = schedule(100, 0.1, 0.1, 3).unwrap();
        let f = DensityModel::standard_gaussian(3);
        assert!(matches!(sandwich_construct(&f, None, &s, 8), Err(EmpiricalError::UnsupportedDimension(3))));
    }
}

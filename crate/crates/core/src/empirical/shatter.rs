//! Brute-force VC dimension estimates: try point configurations of growing
//! size and check every labeling for a realising family member.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{EmpiricalError, SetFamilySpec};
use crate::bounds::{combo_bound_for, vc_polytope_bound_base};
use crate::geometry::lp::{hulls_intersect, in_convex_hull};
use crate::geometry::Point;

pub const MAX_POINTS: usize = 12;
const LABELING_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShatterResult {
    /// Largest size at which some tried configuration was shattered.
    pub vc_lower: usize,
    /// Set when every tried configuration of size `vc + 1` failed.
    pub vc_exact_up_to: Option<usize>,
    /// Closed-form upper bound for the family, when one applies.
    pub bound: Option<u64>,
}

/// Upper bound on the VC dimension: `2(d+1)h log2((d+1)h)` for
/// intersections of `h` halfspaces, the `V / log V = dLH` solution for
/// boolean combinations. `None` for families of unbounded dimension.
pub fn family_vc_bound(fam: &SetFamilySpec, d: usize) -> Option<u64> {
    match fam {
        SetFamilySpec::Single(_) => Some(0),
        SetFamilySpec::Halfspaces => Some(vc_polytope_bound_base(d, 1, 2.0)),
        SetFamilySpec::AxisBoxes => Some(vc_polytope_bound_base(d, 2 * d as u64, 2.0)),
        SetFamilySpec::Polytopes { facets } => Some(vc_polytope_bound_base(d, *facets as u64, 2.0)),
        SetFamilySpec::Combos { levels, facets } => Some(combo_bound_for((d * levels * facets) as f64)),
        SetFamilySpec::SubsetHulls { .. } => None,
    }
}

pub fn shattering_vc<R: Rng + ?Sized>(
    fam: &SetFamilySpec,
    d: usize,
    max_points: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ShatterResult, EmpiricalError> {
    if max_points > MAX_POINTS {
        return Err(EmpiricalError::BudgetExceeded(format!("max_points {max_points} > {MAX_POINTS}")));
    }
    if (trials.max(1) as u64) << max_points > LABELING_BUDGET {
        return Err(EmpiricalError::BudgetExceeded(format!("{trials} trials of 2^{max_points} labelings")));
    }
    fam.validate(d, MAX_POINTS)?;
    let mut vc = 0;
    let mut exact = None;
    for t in 1..=max_points {
        let found = (0..trials.max(1)).any(|trial| {
            let x = configuration(d, t, trial, rng);
            shattered(fam, &x)
        });
        if !found {
            exact = Some(t - 1);
            break;
        }
        vc = t;
    }
    Ok(ShatterResult { vc_lower: vc, vc_exact_up_to: exact, bound: family_vc_bound(fam, d) })
}

/// Trial 0 is a perturbed configuration in convex position (circle or
/// moment curve); later trials are Gaussian.
fn configuration<R: Rng + ?Sized>(d: usize, t: usize, trial: usize, rng: &mut R) -> Vec<Point> {
    (0..t)
        .map(|k| {
            if trial == 0 && d >= 2 {
                let s = 2.0 * std::f64::consts::PI * k as f64 / t as f64 + 1e-3 * rng.random::<f64>();
                let mut v = vec![s.cos(), s.sin()];
                for p in 2..d {
                    v.push((s - 3.0).powi(p as i32 + 1) / 10.0);
                }
                Point::new(v)
            } else {
                Point::new((0..d).map(|_| rng.sample(StandardNormal)).collect())
            }
        })
        .collect()
}

fn split(x: &[Point], mask: u32) -> (Vec<&[f64]>, Vec<&[f64]>) {
    let (mut yes, mut no) = (Vec::new(), Vec::new());
    for (i, p) in x.iter().enumerate() {
        if mask >> i & 1 == 1 {
            yes.push(p.coords());
        } else {
            no.push(p.coords());
        }
    }
    (yes, no)
}

fn shattered(fam: &SetFamilySpec, x: &[Point]) -> bool {
    let t = x.len();
    (0..1u32 << t).all(|mask| realizable(fam, x, mask))
}

/// Some member `A` of the family has `A ∩ x = {x_i : bit i of mask}`.
fn realizable(fam: &SetFamilySpec, x: &[Point], mask: u32) -> bool {
    let full = (1u32 << x.len()) - 1;
    match fam {
        SetFamilySpec::Single(region) => {
            let own = x.iter().enumerate().filter(|(_, p)| region.contains(p)).fold(0u32, |m, (i, _)| m | 1 << i);
            own == mask
        }
        SetFamilySpec::Halfspaces => {
            let (yes, no) = split(x, mask);
            mask == 0 || mask == full || !hulls_intersect(&yes, &no)
        }
        SetFamilySpec::AxisBoxes => {
            let (yes, no) = split(x, mask);
            if yes.is_empty() {
                return true;
            }
            let d = yes[0].len();
            let lo: Vec<f64> = (0..d).map(|k| yes.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
            let hi: Vec<f64> = (0..d).map(|k| yes.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
            !no.iter().any(|p| (0..d).all(|k| p[k] >= lo[k] && p[k] <= hi[k]))
        }
        SetFamilySpec::SubsetHulls { .. } => {
            let (yes, no) = split(x, mask);
            yes.is_empty() || !no.iter().any(|p| in_convex_hull(&yes, p))
        }
        SetFamilySpec::Polytopes { facets } => polytope_realizable(x, mask, full & !mask, *facets),
        SetFamilySpec::Combos { levels, facets } => {
            // Unions only: a sub-family, so shattering found here is genuine.
            let out = full & !mask;
            cover(mask, *levels, &mut |g| polytope_realizable(x, g, out, *facets))
        }
    }
}

/// An intersection of at most `h` halfspaces contains the points in `yes`
/// and none in `no`: each excluded point must be cut off by one of the
/// halfspaces, and a group of excluded points can share a halfspace iff its
/// hull misses the hull of `yes`.
fn polytope_realizable(x: &[Point], yes: u32, no: u32, h: usize) -> bool {
    if yes == 0 || no == 0 {
        return true;
    }
    let pick = |m: u32| -> Vec<&[f64]> { (0..x.len()).filter(|i| m >> i & 1 == 1).map(|i| x[i].coords()).collect() };
    let inside = pick(yes);
    let mut memo: HashMap<u32, bool> = HashMap::new();
    let mut separable = |g: u32| *memo.entry(g).or_insert_with(|| !hulls_intersect(&inside, &pick(g)));
    cover(no, h, &mut separable)
}

/// Can `set` be covered by at most `k` groups accepted by `ok`? `ok` must be
/// closed under taking subsets.
fn cover<F: FnMut(u32) -> bool>(set: u32, k: usize, ok: &mut F) -> bool {
    if set == 0 {
        return true;
    }
    if k == 0 {
        return false;
    }
    if ok(set) {
        return true;
    }
    if k == 1 {
        return false;
    }
    let first = set & set.wrapping_neg();
    let rest = set & !first;
    // Groups containing the lowest element, largest first.
    let mut sub = rest;
    loop {
        let g = sub | first;
        if ok(g) && cover(set & !g, k - 1, ok) {
            return true;
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::Region;
    use crate::rng::stream;

    #[test]
    fn halfplanes_shatter_three() {
        let mut rng = stream(5, 0);
        let r = shattering_vc(&SetFamilySpec::Halfspaces, 2, 5, 20, &mut rng).unwrap();
        assert_eq!((r.vc_lower, r.vc_exact_up_to), (3, Some(3)));
        assert!(r.vc_lower as u64 <= r.bound.unwrap());
    }

    #[test]
    fn intervals_shatter_two() {
        let mut rng = stream(5, 1);
        let r = shattering_vc(&SetFamilySpec::intervals(), 1, 5, 20, &mut rng).unwrap();
        assert_eq!((r.vc_lower, r.vc_exact_up_to), (2, Some(2)));
        assert_eq!(r.bound, Some(16));
    }

    #[test]
    fn single_set_shatters_nothing() {
        let mut rng = stream(5, 2);
        for region in [Region::All, Region::Empty] {
            let r = shattering_vc(&SetFamilySpec::Single(region), 2, 3, 5, &mut rng).unwrap();
            assert_eq!(r.vc_lower, 0);
        }
    }

    #[test]
    fn quadrilaterals_shatter_more_than_triangles() {
        let mut rng = stream(5, 3);
        let tri = shattering_vc(&SetFamilySpec::Polytopes { facets: 3 }, 2, 9, 3, &mut rng).unwrap();
        let quad = shattering_vc(&SetFamilySpec::Polytopes { facets: 4 }, 2, 10, 3, &mut rng).unwrap();
        // Convex k-gons: 2k + 1.
        assert_eq!(tri.vc_lower, 7);
        assert_eq!(quad.vc_lower, 9);
    }

    #[test]
    fn too_many_points_is_refused() {
        let mut rng = stream(5, 4);
        assert!(matches!(
            shattering_vc(&SetFamilySpec::Halfspaces, 2, 13, 1, &mut rng),
            Err(EmpiricalError::BudgetExceeded(_))
        ));
    }
}

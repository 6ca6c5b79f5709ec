use logconcave::geometry::{convex_hull, inner_approx, outer_approx};
use logconcave::{Point, TentDensity};
use proptest::prelude::*;

fn cloud(d: usize, lo: usize, hi: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), lo..hi)
        .prop_map(|v| v.into_iter().map(Point::new).collect())
}

fn any_cloud(lo: usize, hi: usize) -> impl Strategy<Value = Vec<Point>> {
    (2usize..=3).prop_flat_map(move |d| cloud(d, lo.max(d + 2), hi))
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|c| c.to_bits()).collect()
}

fn sorted_keys(ps: &[Point]) -> Vec<Vec<u64>> {
    let mut k: Vec<_> = ps.iter().map(|p| key(p)).collect();
    k.sort();
    k
}

/// Barycentric coordinates of `x` in the simplex `s`, if it is full-dimensional.
fn barycentric(s: &[&[f64]], x: &[f64]) -> Option<Vec<f64>> {
    let d = x.len();
    let m = nalgebra::DMatrix::from_fn(d, d, |r, c| s[c + 1][r] - s[0][r]);
    let rhs = nalgebra::DVector::from_fn(d, |r, _| x[r] - s[0][r]);
    let lam = m.lu().solve(&rhs)?;
    let mut out = vec![1.0 - lam.sum()];
    out.extend(lam.iter());
    Some(out)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (k - 1..n).flat_map(|last| combinations(last, k - 1).into_iter().map(move |mut c| {
        c.push(last);
        c
    })).collect()
}

/// Carathéodory: `x` is in the hull of `others` iff it is in some
/// `(d+1)`-point simplex of them.
fn in_hull_of(others: &[&Point], x: &[f64]) -> bool {
    let d = x.len();
    combinations(others.len(), d + 1).into_iter().any(|c| {
        let s: Vec<&[f64]> = c.iter().map(|&i| &others[i][..]).collect();
        barycentric(&s, x).is_some_and(|b| b.iter().all(|&v| v >= -1e-12))
    })
}

fn shoelace(ps: &[Point]) -> f64 {
    let c = ps.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
    let c = [c[0] / ps.len() as f64, c[1] / ps.len() as f64];
    let mut v: Vec<&Point> = ps.iter().collect();
    v.sort_by(|a, b| (a[1] - c[1]).atan2(a[0] - c[0]).total_cmp(&(b[1] - c[1]).atan2(b[0] - c[0])));
    (0..v.len()).map(|i| {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        a[0] * b[1] - a[1] * b[0]
    }).sum::<f64>().abs() / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hull_of_hull_vertices_is_the_same_hull(pts in any_cloud(5, 40)) {
        let h = convex_hull(&pts).unwrap();
        let again = convex_hull(h.vertices()).unwrap();
        prop_assert_eq!(sorted_keys(h.vertices()), sorted_keys(again.vertices()));
    }

    #[test]
    fn hull_vertices_match_a_brute_force_oracle(pts in any_cloud(4, 9)) {
        let h = convex_hull(&pts).unwrap();
        let mut expected: Vec<Vec<u64>> = (0..pts.len())
            .filter(|&i| {
                let others: Vec<&Point> = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|p| p.1).collect();
                !in_hull_of(&others, &pts[i])
            })
            .map(|i| key(&pts[i]))
            .collect();
        expected.sort();
        prop_assert_eq!(sorted_keys(h.vertices()), expected);
    }

    #[test]
    fn triangulations_add_up_to_the_volume(pts in any_cloud(5, 30)) {
        let h = convex_hull(&pts).unwrap();
        let v = h.volume();
        let cone = h.triangulate().volume();
        prop_assert!((cone - v).abs() <= 1e-9 * v, "{} vs {}", cone, v);
        let flat = TentDensity::new(pts.clone(), vec![0.0; pts.len()]).unwrap();
        let regular = flat.cells().volume();
        prop_assert!((regular - v).abs() <= 1e-9 * v, "{} vs {}", regular, v);
        if pts[0].dim() == 2 {
            let s = shoelace(h.vertices());
            prop_assert!((s - v).abs() <= 1e-9 * v, "{} vs {}", s, v);
        }
    }

    #[test]
    fn approximations_sandwich_the_body(pts in any_cloud(8, 60), extra in 0usize..30) {
        let k = convex_hull(&pts).unwrap();
        let budget = k.dim() + 1 + extra;
        let inner = inner_approx(&k, budget).unwrap();
        let outer = outer_approx(&k, budget).unwrap();
        for v in inner.polytope.vertices() {
            prop_assert!(k.contains(v));
        }
        for v in k.vertices() {
            prop_assert!(outer.polytope.contains(v));
        }
        prop_assert!(inner.polytope.volume() <= k.volume() * (1.0 + 1e-12));
        prop_assert!(inner.volume_gap >= -1e-12);
    }
}

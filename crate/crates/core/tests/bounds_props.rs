use logconcave::bounds::{combo_bound_for, n1_real, sample_bounds, schedule, vc_bounds, vc_consistency};
use proptest::prelude::*;

proptest! {
    #[test]
    fn calculators_are_pure(d in 1usize..=4, eps in 0.01f64..0.5, tau in 0.01f64..0.5) {
        prop_assert_eq!(sample_bounds(d, eps, tau).unwrap(), sample_bounds(d, eps, tau).unwrap());
        prop_assert_eq!(schedule(1000, eps, tau, d).unwrap(), schedule(1000, eps, tau, d).unwrap());
    }

    #[test]
    fn schedule_matches_its_formulas(n in 1u64..10_000_000, eps in 0.01f64..0.99, tau in 0.01f64..0.99) {
        let s = schedule(n, eps, tau, 2).unwrap();
        let z = (100.0 * (n as f64).powi(4) / (tau * tau)).ln();
        prop_assert!((s.z - z).abs() <= 1e-12 * z);
        prop_assert!((s.delta - eps / (32.0 * z)).abs() <= 1e-12 * s.delta);
        prop_assert!((s.p_min_ratio.ln() + z).abs() <= 1e-9 * z);
        prop_assert!(schedule(n + 1, eps, tau, 2).unwrap().delta < s.delta);
    }

    #[test]
    fn n1_shrinks_as_eps_grows(d in 1usize..=3, eps in 0.01f64..0.3, tau in 0.01f64..0.5) {
        prop_assert!(n1_real(d, eps * 1.5, tau) < n1_real(d, eps, tau));
    }

    #[test]
    fn combo_bound_is_the_smallest_solution(target in 0.0f64..1e6) {
        let v = combo_bound_for(target);
        let ratio = |v: u64| v as f64 / (v as f64).log2();
        prop_assert!(v >= 3 && ratio(v) >= target);
        if v > 3 {
            prop_assert!(ratio(v - 1) < target);
        }
    }

    #[test]
    fn log2_polytope_bound_dominates_ln(d in 1usize..=5, h in 1u64..10_000, l in 1u64..100) {
        let b = vc_bounds(d, h, l);
        prop_assert!(b.polytope_bound >= b.polytope_bound_ln);
    }
}

#[test]
fn vc_consistency_is_reported_over_the_grid() {
    for d in 1..=3 {
        for eps in [0.1, 0.05] {
            let rows = vc_consistency(d, eps, 0.1).unwrap();
            assert_eq!(rows.len(), 2);
            for r in rows {
                assert!(r.lhs.is_finite() && r.rhs > 0.0);
                println!("{} d={} eps={}: sqrt(V/n) = {:.3e} vs delta/10 = {:.3e} ({})", r.family, d, eps, r.lhs, r.rhs, r.holds);
            }
        }
    }
}

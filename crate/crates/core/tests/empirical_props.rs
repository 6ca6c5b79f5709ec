use logconcave::bounds::schedule;
use logconcave::empirical::{
    convex_discrepancy, family_vc_bound, sandwich_construct, shattering_vc, DiscrepancyOptions, EmpiricalMeasure, SetFamilySpec,
    TrueMeasure,
};
use logconcave::geometry::convex_hull;
use logconcave::rng::{derive_stream_id, stream};
use logconcave::{DensityModel, Point};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = (SetFamilySpec, usize)> {
    prop_oneof![
        (1usize..=3).prop_map(|d| (SetFamilySpec::Halfspaces, d)),
        (1usize..=2).prop_map(|d| (SetFamilySpec::AxisBoxes, d)),
        (3usize..=4).prop_map(|h| (SetFamilySpec::Polytopes { facets: h }, 2)),
        (1usize..=2, 1usize..=2).prop_map(|(l, h)| (SetFamilySpec::Combos { levels: l, facets: h }, 1)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shattering_never_beats_the_bound((fam, d) in family(), seed in any::<u64>()) {
        let r = shattering_vc(&fam, d, 8, 4, &mut stream(seed, 0)).unwrap();
        let bound = family_vc_bound(&fam, d).unwrap();
        prop_assert!(r.vc_lower as u64 <= bound, "{} > {}", r.vc_lower, bound);
    }

    #[test]
    fn the_circle_is_never_learned(n in 3usize..300, seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let em = EmpiricalMeasure::new(TrueMeasure::UnitCircle.sample(&mut rng, n));
        let fam = SetFamilySpec::SubsetHulls { k: n };
        let r = convex_discrepancy(TrueMeasure::UnitCircle, &em, &fam, &DiscrepancyOptions::default(), &mut rng).unwrap();
        prop_assert!(r.sup >= 1.0 - 1e-9, "{}", r.sup);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sandwiches_nest(
        tri in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 3),
        facets in 8usize..64,
        seed in any::<u64>(),
    ) {
        let pts: Vec<Point> = tri.into_iter().map(Point::new).collect();
        let c = convex_hull(&pts);
        prop_assume!(c.as_ref().is_ok_and(|c| c.volume() > 1e-3));
        let f0 = DensityModel::standard_gaussian(2);
        let s = schedule(1000, 0.1, 0.1, 2).unwrap();
        let sw = sandwich_construct(&f0, Some(&c.unwrap()), &s, facets).unwrap();
        let v = sw.verify(&f0, 3000, &mut stream(seed, 0));
        prop_assert_eq!(v.violations, 0);
        for r in &sw.reports {
            prop_assert!(r.inner_area <= r.level_area * (1.0 + 1e-9) + 1e-12);
            prop_assert!(r.outer_area >= r.level_area * (1.0 - 1e-9));
        }
    }
}

/// Exceedances of the sup deviation over its mean by `delta` stay under
/// `exp(-2 n delta^2)` up to binomial noise.
#[test]
fn sup_deviation_concentrates() {
    let f = DensityModel::standard_gaussian(1);
    let (n, reps) = (100usize, 600usize);
    let opts = DiscrepancyOptions::default();
    let sups: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = stream(21, derive_stream_id(&[n as u64, r as u64]));
            let em = EmpiricalMeasure::new(f.sample(&mut rng, n));
            convex_discrepancy(TrueMeasure::Density(&f), &em, &SetFamilySpec::Halfspaces, &opts, &mut rng).unwrap().sup
        })
        .collect();
    let mean = sups.iter().sum::<f64>() / reps as f64;
    for delta in [0.05, 0.1] {
        let freq = sups.iter().filter(|&&s| s > mean + delta).count() as f64 / reps as f64;
        let p = (-2.0 * n as f64 * delta * delta).exp();
        let slack = 3.0 * (p * (1.0 - p) / reps as f64).sqrt();
        assert!(freq <= p + slack, "delta {delta}: {freq} > {p} + {slack}");
    }
}

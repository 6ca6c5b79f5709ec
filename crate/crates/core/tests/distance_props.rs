use logconcave::densities::{Gaussian, ProductLaplace};
use logconcave::distances::{grid_quadrature, hellinger_sq, kl_divergence, tv_distance, Metric};
use logconcave::rng::stream;
use logconcave::{fit_mle, DensityModel, SolverOptions};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn shifted(mean: Vec<f64>, scale: f64) -> DensityModel {
    let d = mean.len();
    let cov = (0..d * d).map(|k| if k / d == k % d { scale * scale } else { 0.0 }).collect();
    Gaussian::new(mean, cov).unwrap().into()
}

fn fitted(d: usize, n: usize, seed: u64) -> DensityModel {
    let x = DensityModel::standard_gaussian(d).sample(&mut stream(seed, 7), n);
    fit_mle(&x, &SolverOptions::default()).unwrap().model()
}

/// Gaussians, Laplaces and fitted tents in d = 1 or 2.
fn pair() -> impl Strategy<Value = (DensityModel, DensityModel)> {
    (1usize..=2, 0u8..4, prop::collection::vec(-1.5f64..1.5, 2), 0.5f64..2.0, any::<u64>()).prop_map(|(d, kind, m, s, seed)| {
        let f = shifted(vec![0.0; d], 1.0);
        let g = match kind {
            0 => shifted(m[..d].to_vec(), 1.0),
            1 => shifted(m[..d].to_vec(), s),
            2 => ProductLaplace::new(vec![s; d]).unwrap().into(),
            _ => fitted(d, 40, seed),
        };
        (f, g)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, rng_seed: RngSeed::Fixed(0x5eed), ..ProptestConfig::default() })]

    #[test]
    fn hellinger_is_below_tv_and_kl((f, g) in pair(), seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let h = hellinger_sq(&f, &g, 20_000, &mut rng).unwrap();
        let tv = tv_distance(&f, &g, 20_000, &mut rng).unwrap();
        prop_assert!(h.value <= tv.value + 3.0 * (h.stderr.powi(2) + tv.stderr.powi(2)).sqrt(), "{:?} {:?}", h, tv);
        for (a, b) in [(&f, &g), (&g, &f)] {
            let kl = kl_divergence(a, b, 20_000, &mut rng).unwrap();
            if !kl.is_infinite() {
                prop_assert!(h.value <= kl.value + 3.0 * (h.stderr.powi(2) + kl.stderr.powi(2)).sqrt(), "{:?} {:?}", h, kl);
            }
        }
    }

    #[test]
    fn hellinger_is_symmetric((f, g) in pair(), seed in any::<u64>()) {
        let ga = grid_quadrature(Metric::HellingerSq, &f, &g, 256).unwrap();
        let gb = grid_quadrature(Metric::HellingerSq, &g, &f, 256).unwrap();
        prop_assert_eq!(ga.value, gb.value);
        let a = hellinger_sq(&f, &g, 20_000, &mut stream(seed, 1)).unwrap();
        let b = hellinger_sq(&g, &f, 20_000, &mut stream(seed, 2)).unwrap();
        prop_assert!((a.value - b.value).abs() <= 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
    }

    #[test]
    fn monte_carlo_agrees_with_the_grid((f, g) in pair(), seed in any::<u64>()) {
        let grid = grid_quadrature(Metric::HellingerSq, &f, &g, 512).unwrap();
        let mc = hellinger_sq(&f, &g, 50_000, &mut stream(seed, 3)).unwrap();
        prop_assert!((grid.value - mc.value).abs() <= 3.0 * mc.stderr, "grid {} mc {} ± {}", grid.value, mc.value, mc.stderr);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hellinger_distance_obeys_the_triangle_inequality(n in 10usize..80, s1 in any::<u64>(), s2 in any::<u64>()) {
        let f0 = DensityModel::standard_gaussian(1);
        let (fhat, g) = (fitted(1, n, s1), fitted(1, n, s2));
        let h = |a: &DensityModel, b: &DensityModel| grid_quadrature(Metric::HellingerSq, a, b, 4096).unwrap().value.max(0.0).sqrt();
        prop_assert!(h(&f0, &fhat) <= h(&f0, &g) + h(&g, &fhat) + 1e-6);
    }
}

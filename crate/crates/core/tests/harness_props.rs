use logconcave::harness::{fit_slope, DensitySpec, ExperimentConfig};
use proptest::prelude::*;

proptest! {
    #[test]
    fn slope_of_a_power_law_is_exact(
        s in -2.0f64..2.0,
        c in 0.01f64..100.0,
        grid in prop::collection::btree_set(1u32..20, 3..8),
    ) {
        let pts: Vec<(f64, f64)> = grid.iter().map(|&k| {
            let n = 2f64.powi(k as i32);
            (n, c * n.powf(s))
        }).collect();
        let fit = fit_slope(&pts).unwrap();
        prop_assert!((fit.slope - s).abs() < 1e-9);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-9 || s.abs() < 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fit.r_squared));
    }

    #[test]
    fn config_text_round_trips(
        d in 1usize..=3,
        f0 in prop::sample::select(vec!["gaussian", "laplace", "uniform"]),
        grid in prop::collection::btree_set(2usize..100_000, 1..6),
        replicates in 1usize..50,
        budget in 100usize..1_000_000,
        seed in any::<u64>(),
    ) {
        let grid: Vec<usize> = grid.into_iter().collect();
        let text = format!(
            "# generated\n[experiment]\nkind = rate\nd = {d}\nf0 = {f0}\nn_grid = {}\nreplicates = {replicates}\n[distance]\nbudget = {budget}\n[output]\nseed = {seed}\n",
            grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.d, d);
        prop_assert_eq!(cfg.f0, f0.parse::<DensitySpec>().unwrap());
        prop_assert_eq!(cfg.n_grid, grid);
        prop_assert_eq!((cfg.replicates, cfg.distance_budget, cfg.seed), (replicates, budget, seed));
    }
}

//! The acceptance criteria, one line each. Runs as a plain binary so the
//! report is always printed; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use logconcave::bounds::{
    mle_max_threshold, n1_real, sample_bounds, sandwich_facets, sandwich_levels, schedule, vc_bounds, Count,
};
use logconcave::densities::{exp_affine_integral, std_normal_cdf, Gaussian, ProductLaplace};
use logconcave::distances::{gaussian_closed_form, hellinger_sq, kl_divergence, tv_distance, Metric};
use logconcave::empirical::{
    convex_discrepancy, family_vc_bound, sandwich_construct, shattering_vc, vc_deviation_curve, DiscrepancyOptions,
    EmpiricalMeasure, SetFamilySpec, TrueMeasure,
};
use logconcave::geometry::{convex_hull, inner_approx, outer_approx, PolytopeV};
use logconcave::harness::{fit_slope, run_rate_experiment, ExperimentConfig};
use logconcave::mle::{empirical_log_likelihood, fit_mle, SolverOptions};
use logconcave::rng::{derive_stream_id, stream};
use logconcave::{DensityModel, Point};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("rate d=1", rate_d1),
        ("rate d=2", rate_d2),
        ("mle closed-form fits", mle_oracles),
        ("exp-affine integral", numeric_kernel),
        ("distances", distances),
        ("polytope approximation", approximation),
        ("vc suite", vc_suite),
        ("circle counterexample", circle),
        ("sandwich", sandwich),
        ("support and mass", support_and_mass),
        ("calculators", calculators),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "[{}] {:>2} {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn rate(d: usize, n_grid: Vec<usize>, replicates: usize, max_slope: f64, min_r2: f64) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { d, n_grid, replicates, seed: 20_240_601, out_dir: dir.path().into(), ..Default::default() };
    let res = match run_rate_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let fit = match res.slope() {
        Ok(f) => f,
        Err(e) => return outcome(false, e.to_string()),
    };
    let medians: Vec<String> = res.medians().iter().map(|(n, v)| format!("{n}:{v:.2e}")).collect();
    outcome(
        fit.slope <= max_slope && fit.r_squared >= min_r2,
        format!(
            "slope {:.3} (need <= {max_slope}), r2 {:.3} (need >= {min_r2}), flagged {}, medians [{}]",
            fit.slope,
            fit.r_squared,
            res.flagged(),
            medians.join(" ")
        ),
    )
}

fn rate_d1() -> Outcome {
    rate(1, vec![100, 200, 400, 800, 1600, 3200], 20, -0.45, 0.9)
}

fn rate_d2() -> Outcome {
    rate(2, vec![125, 250, 500, 1000], 10, -0.35, 0.85)
}

fn mle_oracles() -> Outcome {
    let mut worst_h: f64 = 0.0;
    let mut worst_obj: f64 = 0.0;
    for xs in [vec![0.0, 1.0], vec![0.0, 0.5, 1.0]] {
        let pts: Vec<Point> = xs.iter().map(|&x| Point::from([x])).collect();
        let sol = match fit_mle(&pts, &SolverOptions::default()) {
            Ok(s) => s,
            Err(e) => return outcome(false, e.to_string()),
        };
        for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
            worst_h = worst_h.max(sol.density.ln_pdf(&[x]).abs());
        }
        worst_obj = worst_obj.max(sol.objective.abs());
    }
    outcome(worst_h <= 1e-6 && worst_obj <= 1e-8, format!("max |log height| {worst_h:.1e}, max |objective| {worst_obj:.1e}"))
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (1..=m)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (0.5 * (1.0 + x), 0.5 * w)
        })
        .collect()
}

/// Collapsed-coordinate tensor Gauss rule on the simplex, with the order
/// doubled until two rules agree.
fn simplex_quadrature(pts: &[Vec<f64>], y: &[f64]) -> f64 {
    let d = pts.len() - 1;
    let mut m = [[0.0; 3]; 3];
    for r in 0..d {
        for c in 0..d {
            m[r][c] = pts[c + 1][r] - pts[0][r];
        }
    }
    let det = match d {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
    .abs();
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g: Vec<f64> = (1..=d).map(|k| y[k] - y[0]).collect();
    let rule = |order: usize| -> f64 {
        let gl = gauss_legendre(order);
        let f = |x: &[f64]| (y[0] - ymax + x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()).exp();
        let mut s = 0.0;
        match d {
            1 => {
                for &(u, w) in &gl {
                    s += w * f(&[u]);
                }
            }
            2 => {
                for &(u, wu) in &gl {
                    for &(v, wv) in &gl {
                        s += wu * wv * (1.0 - u) * f(&[u, (1.0 - u) * v]);
                    }
                }
            }
            _ => {
                for &(u, wu) in &gl {
                    for &(v, wv) in &gl {
                        for &(t, wt) in &gl {
                            let j = (1.0 - u) * (1.0 - u) * (1.0 - v);
                            s += wu * wv * wt * j * f(&[u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * t]);
                        }
                    }
                }
            }
        }
        s * det * ymax.exp()
    };
    let mut order = 16;
    let mut prev = rule(order);
    loop {
        order *= 2;
        let next = rule(order);
        if (next - prev).abs() <= 1e-14 * next.abs() || order >= 128 {
            return next;
        }
        prev = next;
    }
}

fn numeric_kernel() -> Outcome {
    let mut rng = stream(4, 0);
    let mut worst: f64 = 0.0;
    let mut tight = 0;
    for i in 0..1000 {
        let d = 1 + i % 3;
        let pts: Vec<Vec<f64>> = (0..=d).map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let base: f64 = rng.sample::<f64, _>(StandardNormal) * 3.0;
        let y: Vec<f64> = match i % 4 {
            0 => (0..=d).map(|_| base + 1e-9 * rng.random::<f64>()).collect(),
            1 => (0..=d).map(|_| base + 1e-12 * rng.random::<f64>()).collect(),
            2 => (0..=d).map(|_| base + 8.0 * rng.sample::<f64, _>(StandardNormal)).collect(),
            _ => (0..=d).map(|_| base + rng.sample::<f64, _>(StandardNormal)).collect(),
        };
        if i % 4 < 2 {
            tight += 1;
        }
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let Ok(got) = exp_affine_integral(&refs, &y) else { continue };
        let want = simplex_quadrature(&pts, &y);
        worst = worst.max((got - want).abs() / want);
    }
    outcome(worst <= 1e-10, format!("max rel error {worst:.2e} over 1000 simplices ({tight} with spread < 1e-8)"))
}

fn distances() -> Outcome {
    let f = DensityModel::standard_gaussian(2);
    let g: DensityModel = Gaussian::new(vec![1.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap().into();
    let mut rng = stream(5, 0);
    let budget = 100_000;
    let want = [1.0 - (-0.125f64).exp(), 2.0 * std_normal_cdf(0.5) - 1.0, 0.5];
    let ests = [
        hellinger_sq(&f, &g, budget, &mut rng).unwrap(),
        tv_distance(&f, &g, budget, &mut rng).unwrap(),
        kl_divergence(&f, &g, budget, &mut rng).unwrap(),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for ((e, w), name) in ests.iter().zip(want).zip(["h2", "tv", "kl"]) {
        let z = (e.value - w).abs() / e.stderr;
        ok &= z <= 3.0;
        parts.push(format!("{name} {:.5} vs {w:.5} ({z:.1} se)", e.value));
    }
    for (m, w) in [Metric::HellingerSq, Metric::Tv, Metric::Kl].into_iter().zip(want) {
        ok &= gaussian_closed_form(m, &f, &g).is_some_and(|c| (c.value - w).abs() < 1e-12);
    }
    let mut chain_fail = 0;
    for k in 0..50 {
        let mut rng = stream(5, derive_stream_id(&[1, k]));
        let d = 1 + (k % 2) as usize;
        let model = |rng: &mut logconcave::rng::Stream| -> DensityModel {
            match rng.random_range(0..3) {
                0 => {
                    let mean = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let a: Vec<f64> = (0..d * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let mut cov = vec![0.0; d * d];
                    for r in 0..d {
                        for c in 0..d {
                            cov[r * d + c] = (0..d).map(|j| a[r * d + j] * a[c * d + j]).sum::<f64>() + if r == c { 0.3 } else { 0.0 };
                        }
                    }
                    Gaussian::new(mean, cov).unwrap().into()
                }
                1 => ProductLaplace::new((0..d).map(|_| 0.5 + rng.random::<f64>()).collect()).unwrap().into(),
                _ => {
                    let lo: Vec<f64> = (0..d).map(|_| -1.0 - rng.random::<f64>()).collect();
                    let hi: Vec<f64> = (0..d).map(|_| 1.0 + rng.random::<f64>()).collect();
                    DensityModel::uniform_box(&lo, &hi).unwrap()
                }
            }
        };
        let (a, b) = (model(&mut rng), model(&mut rng));
        let h = hellinger_sq(&a, &b, 20_000, &mut rng).unwrap();
        let t = tv_distance(&a, &b, 20_000, &mut rng).unwrap();
        let kl = kl_divergence(&a, &b, 20_000, &mut rng).unwrap();
        let slack = |x: f64, y: f64| 3.0 * (x * x + y * y).sqrt();
        if h.value > t.value + slack(h.stderr, t.stderr) || (!kl.is_infinite() && h.value > kl.value + slack(h.stderr, kl.stderr)) {
            chain_fail += 1;
        }
    }
    ok &= chain_fail == 0;
    outcome(ok, format!("{}; metric chain violations {chain_fail}/50", parts.join(", ")))
}

fn regular_polygon(m: usize) -> PolytopeV {
    let pts: Vec<Point> = (0..m)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            Point::from([t.cos(), t.sin()])
        })
        .collect();
    convex_hull(&pts).unwrap()
}

fn approximation() -> Outcome {
    let disk = regular_polygon(4096);
    let target = 2.0 * PI.powi(3) / 3.0;
    let mut ok = true;
    let mut scaled = Vec::new();
    let mut violations = 0;
    let mut rng = stream(6, 0);
    for l in [16usize, 32, 64, 128] {
        let inner = inner_approx(&disk, l).unwrap().polytope;
        let outer = outer_approx(&disk, l).unwrap().polytope;
        let s = (PI - inner.volume()) * (l * l) as f64;
        ok &= (s / target - 1.0).abs() <= 0.1;
        scaled.push(format!("{l}:{s:.3}"));
        violations += inner.vertices().iter().filter(|v| !disk.contains(v)).count();
        violations += disk.vertices().iter().filter(|v| !outer.contains(v)).count();
        for _ in 0..20_000 {
            let x = [2.4 * rng.random::<f64>() - 1.2, 2.4 * rng.random::<f64>() - 1.2];
            let (a, b, c) = (inner.contains(&x), disk.contains(&x), outer.contains(&x));
            violations += usize::from((a && !b) || (b && !c));
        }
    }
    ok &= violations == 0;
    outcome(ok, format!("deficit*l^2 [{}] vs {target:.4}, membership violations {violations}", scaled.join(" ")))
}

fn vc_suite() -> Outcome {
    let mut rng = stream(7, 0);
    let mut ok = true;
    let mut parts = Vec::new();
    let cases: [(SetFamilySpec, usize, usize, Option<usize>); 6] = [
        (SetFamilySpec::Halfspaces, 2, 5, Some(3)),
        (SetFamilySpec::intervals(), 1, 5, Some(2)),
        (SetFamilySpec::Halfspaces, 1, 4, Some(2)),
        (SetFamilySpec::AxisBoxes, 2, 6, None),
        (SetFamilySpec::Polytopes { facets: 3 }, 2, 8, None),
        (SetFamilySpec::Combos { levels: 2, facets: 2 }, 1, 6, None),
    ];
    for (fam, d, max_points, want) in cases {
        let r = shattering_vc(&fam, d, max_points, 10, &mut rng).unwrap();
        let bound = family_vc_bound(&fam, d).unwrap();
        ok &= want.is_none_or(|w| r.vc_lower == w) && r.vc_lower as u64 <= bound;
        parts.push(format!("{} d={d}: {} <= {bound}", fam.label(), r.vc_lower));
    }
    let b = vc_bounds(1, 2, 1);
    ok &= b.polytope_bound == 16;
    let f = DensityModel::standard_gaussian(1);
    let grid: Vec<usize> = (6..=12).map(|k| 1usize << k).collect();
    let opts = DiscrepancyOptions::default();
    let curve = vc_deviation_curve(TrueMeasure::Density(&f), &SetFamilySpec::Halfspaces, &grid, 400, 71, &opts).unwrap();
    let pts: Vec<(f64, f64)> = curve.iter().map(|c| (c.n as f64, c.mean)).collect();
    let slope = fit_slope(&pts).unwrap().slope;
    ok &= (slope + 0.5).abs() <= 0.05;
    let one = vc_deviation_curve(TrueMeasure::Density(&f), &SetFamilySpec::Halfspaces, &[1], 4000, 72, &opts).unwrap();
    ok &= (one[0].mean - 0.75).abs() <= 0.01;
    outcome(
        ok,
        format!("{}; curve slope {slope:.3}, n=1 mean {:.4} +- {:.4}", parts.join(", "), one[0].mean, one[0].stderr),
    )
}

fn circle() -> Outcome {
    let opts = DiscrepancyOptions::default();
    let mut ok = true;
    let mut sups = Vec::new();
    for n in [10usize, 100, 1000] {
        let mut rng = stream(8, n as u64);
        let em = EmpiricalMeasure::new(TrueMeasure::UnitCircle.sample(&mut rng, n));
        let r = convex_discrepancy(TrueMeasure::UnitCircle, &em, &SetFamilySpec::SubsetHulls { k: n }, &opts, &mut rng).unwrap();
        ok &= r.sup >= 1.0 - 1e-9;
        sups.push(format!("{n}:1-{:.1e}", 1.0 - r.sup));
    }
    let f = DensityModel::standard_gaussian(2);
    let mut decreased = 0;
    for s in 0..10u64 {
        let sup = |n: usize| {
            let fam = SetFamilySpec::SubsetHulls { k: n.div_ceil(2) };
            let mut rng = stream(80 + s, n as u64);
            let em = EmpiricalMeasure::new(f.sample(&mut rng, n));
            convex_discrepancy(TrueMeasure::Density(&f), &em, &fam, &opts, &mut rng).unwrap().sup
        };
        decreased += usize::from(sup(2000) < sup(200));
    }
    ok &= decreased >= 9;
    outcome(ok, format!("circle sups [{}], gaussian hull discrepancy decreased in {decreased}/10 seed pairs", sups.join(" ")))
}

fn sandwich() -> Outcome {
    let f = DensityModel::standard_gaussian(2);
    let s = schedule(1_000_000, 0.1, 0.1, 2).unwrap();
    let h = sandwich_facets(2, s.delta, 1.0) as usize;
    let square = |x_hi: f64| {
        let c = [[-10.0, -10.0], [x_hi, -10.0], [x_hi, 10.0], [-10.0, 10.0]];
        convex_hull(&c.iter().map(|v| Point::from(*v)).collect::<Vec<_>>()).unwrap()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, c) in [("square", square(10.0)), ("half", square(0.0))] {
        let sw = sandwich_construct(&f, Some(&c), &s, h).unwrap();
        let mut rng = stream(9, h as u64);
        let v = sw.verify(&f, 100_000, &mut rng);
        let pass = v.violations == 0 && v.gaps_below(s.delta / 2.0);
        ok &= pass;
        parts.push(format!(
            "{name}: {} probes, {} violations, gaps {:.1e}/{:.1e}",
            v.probes, v.violations, v.gap_inner, v.gap_outer
        ));
    }
    outcome(ok, format!("L={} H={h} delta/2={:.2e}; {}", sandwich_levels(s.n, s.tau), s.delta / 2.0, parts.join("; ")))
}

fn support_and_mass() -> Outcome {
    let mut fits = 0;
    let mut outside_positive = 0;
    let mut worst_mass: f64 = 0.0;
    let mut dominance_fail = 0;
    let models: Vec<DensityModel> = vec![
        DensityModel::standard_gaussian(1),
        ProductLaplace::new(vec![1.0]).unwrap().into(),
        DensityModel::standard_gaussian(2),
        DensityModel::uniform_box(&[0.0, 0.0], &[1.0, 2.0]).unwrap(),
        DensityModel::standard_gaussian(3),
    ];
    for (mi, f0) in models.iter().enumerate() {
        for r in 0..4u64 {
            let mut rng = stream(10, derive_stream_id(&[mi as u64, r]));
            let n = if f0.dim() == 3 { 60 } else { 150 };
            let x = f0.sample(&mut rng, n);
            let sol = match fit_mle(&x, &SolverOptions::default()) {
                Ok(s) => s,
                Err(e) => return outcome(false, format!("fit failed: {e}")),
            };
            fits += 1;
            worst_mass = worst_mass.max((sol.total_mass - 1.0).abs());
            let model = sol.model();
            let hull = sol.density.support();
            let d = f0.dim();
            let lo: Vec<f64> = (0..d).map(|k| hull.vertices().iter().map(|v| v[k]).fold(f64::INFINITY, f64::min)).collect();
            let hi: Vec<f64> = (0..d).map(|k| hull.vertices().iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
            let mut probes = 0;
            while probes < 100 {
                let p: Vec<f64> = (0..d).map(|k| lo[k] + (hi[k] - lo[k]) * (3.0 * rng.random::<f64>() - 1.0)).collect();
                if hull.contains(&p) {
                    continue;
                }
                probes += 1;
                outside_positive += usize::from(model.pdf(&p) > 0.0);
            }
            let lf = empirical_log_likelihood(&model, &x).unwrap();
            let l0 = empirical_log_likelihood(f0, &x).unwrap();
            dominance_fail += usize::from(lf < l0);
        }
    }
    outcome(
        outside_positive == 0 && worst_mass <= 1e-6 && dominance_fail == 0,
        format!("{fits} fits: positive density outside hull {outside_positive}, max |mass-1| {worst_mass:.1e}, dominance failures {dominance_fail}"),
    )
}

fn calculators() -> Outcome {
    let mut bad = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            bad.push(name.to_string());
        }
    };
    let s = schedule(100, 0.1, 0.1, 1).unwrap();
    let z = (1e12f64).ln();
    check("z", (s.z - z).abs() <= 4.0 * f64::EPSILON * z);
    check("z value", (s.z - 27.631021115928547).abs() < 1e-12);
    check("delta", (s.delta - 0.1 / (32.0 * z)).abs() <= 4.0 * f64::EPSILON * s.delta);
    check("p_min", (s.p_min_ratio - 1e-12).abs() <= 4.0 * f64::EPSILON * 1e-12);
    check("z floor", (schedule(1, 0.1, 1.0 - 1e-12, 1).unwrap().z - 100f64.ln()).abs() < 1e-10);
    for (n, tau) in [(1u64, 0.5), (100, 0.1), (12345, 0.01)] {
        let s = schedule(n, 0.1, tau, 2).unwrap();
        check("identity", (s.p_min_ratio * 100.0 * (n as f64).powi(4) / (tau * tau) - 1.0).abs() < 1e-14);
    }
    check("threshold", (mle_max_threshold(&s) - 4.0 * s.z).abs() == 0.0);
    let n1_oracle = (10.0 * 100f64.ln().powi(3)).powi(2).ceil() as u64;
    let r = sample_bounds(1, 0.1, 0.1).unwrap();
    check("N1", r.n1 == Count::Value(n1_oracle));
    check("exponent", sample_bounds(4, 0.1, 0.1).unwrap().rate_exponent == 3.5);
    for d in 1..=3 {
        for eps in [0.2, 0.1, 0.05] {
            check("N1 monotone", n1_real(d, eps / 2.0, 0.1) > n1_real(d, eps, 0.1));
        }
    }
    check("vc 16", vc_bounds(1, 2, 1).polytope_bound == 16);
    check("combo 4", vc_bounds(2, 1, 1).combo_bound == 4);
    check("ledger", !r.ledger.is_empty());
    let again = sample_bounds(1, 0.1, 0.1).unwrap();
    check("pure", again == r && schedule(100, 0.1, 0.1, 1).unwrap() == s);
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("z {:.10}, delta {:.4e}, N1 {}, threshold {:.3}", s.z, s.delta, r.n1, mle_max_threshold(&s))
        } else {
            format!("failed: {}", bad.join(", "))
        },
    )
}

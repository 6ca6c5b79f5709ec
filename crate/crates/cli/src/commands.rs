use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use logconcave::bounds::{sample_bounds, sandwich_facets, sandwich_levels, schedule, vc_consistency, BoundsError};
use logconcave::densities::write_tent;
use logconcave::distances::{estimate, gaussian_closed_form, grid_quadrature, DistanceError, Metric};
use logconcave::empirical::{sandwich_construct, EmpiricalError};
use logconcave::geometry::convex_hull;
use logconcave::harness::{
    emit_plots, run_discrepancy_sweep, run_rate_experiment, DiscrepancyResult, ExperimentConfig, ExperimentKind, ExperimentResult,
    HarnessError, PlotInput, PlotStyle,
};
use logconcave::mle::MleError;
use logconcave::rng::stream;
use logconcave::{fit_mle, DensityModel, Point, SolverOptions};

use crate::input::{parse_density, parse_law, read_points, write_points, Law};
use crate::{BoundsArgs, Cli, Command, DistanceArgs, Failure, FitArgs, PlotArgs, SampleArgs, SandwichArgs, SweepArgs};

/// Stdout writes that stop quietly on a closed pipe.
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io(_) | HarnessError::Experiment(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<MleError> for Failure {
    fn from(e: MleError) -> Self {
        match e {
            MleError::Density(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<DistanceError> for Failure {
    fn from(e: DistanceError) -> Self {
        match e {
            DistanceError::NonFinite => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<EmpiricalError> for Failure {
    fn from(e: EmpiricalError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

/// The configuration file (or defaults) with the global flags applied.
fn base_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.threads == Some(0) {
        return Err(Failure::Invalid("--threads must be at least 1".into()));
    }
    let cfg = base_config(cli)?;
    match &cli.command {
        Command::Fit(a) => fit(&cfg, a),
        Command::Sample(a) => sample(&cfg, a),
        Command::Distance(a) => distance(&cfg, a),
        Command::RateExperiment(a) => rate(cfg, a),
        Command::Discrepancy(a) => discrepancy(cfg, a),
        Command::SandwichDemo(a) => sandwich(&cfg, a),
        Command::Bounds(a) => bounds(a),
        Command::Plot(a) => plot(&cfg, a),
    }
}

fn fit(cfg: &ExperimentConfig, a: &FitArgs) -> Result<(), Failure> {
    if !(a.tolerance > 0.0) {
        return Err(Failure::Invalid(format!("tolerance must be positive, got {}", a.tolerance)));
    }
    let points = read_points(&a.input)?;
    let opts = SolverOptions {
        tolerance: a.tolerance,
        max_iterations: a.max_iterations,
        experimental: a.experimental,
        ..SolverOptions::default()
    };
    let sol = fit_mle(&points, &opts)?;
    let mut footer = String::from("diagnostics\n");
    let _ = writeln!(footer, "objective={}", sol.objective);
    let _ = writeln!(footer, "iterations={}", sol.iterations);
    let _ = writeln!(footer, "mass={}", sol.total_mass);
    let _ = writeln!(footer, "subgradient_norm={}", sol.subgradient_norm);
    let _ = writeln!(footer, "status={}", sol.status);
    let _ = writeln!(footer, "converged={}", sol.converged);
    let _ = writeln!(footer, "distinct_points={}", sol.distinct_points);
    let _ = writeln!(footer, "wall_time_s={:.3}", sol.wall_time);
    let path = a.output.clone().unwrap_or_else(|| cfg.out_dir.join("fit.tent"));
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(&path, write_tent(&sol.density) + &footer).map_err(io(&path))?;
    out!("{}", footer.trim_start_matches("diagnostics\n"));
    outln!("tent={}", path.display());
    if !sol.converged {
        return Err(Failure::Nonconverged(format!("solver stopped with status {}", sol.status)));
    }
    Ok(())
}

fn sample(cfg: &ExperimentConfig, a: &SampleArgs) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(Failure::Invalid("n must be at least 1".into()));
    }
    let mut rng = stream(cfg.seed, 0);
    let points = match parse_law(&a.density, a.d)? {
        Law::Density(f) => f.sample(&mut rng, a.n),
        Law::Circle => {
            use logconcave::empirical::TrueMeasure;
            TrueMeasure::UnitCircle.sample(&mut rng, a.n)
        }
    };
    let text = write_points(&points);
    match &a.output {
        Some(p) => std::fs::write(p, text).map_err(io(p)),
        None => {
            out!("{text}");
            Ok(())
        }
    }
}

fn distance(cfg: &ExperimentConfig, a: &DistanceArgs) -> Result<(), Failure> {
    let metric: Metric = a.metric.parse().map_err(Failure::Invalid)?;
    let f = parse_density(&a.f, a.d)?;
    let g = parse_density(&a.g, a.d)?;
    let est = match a.method.as_str() {
        "mc" => estimate(metric, &f, &g, a.budget, &mut stream(cfg.seed, 0))?,
        "grid" => grid_quadrature(metric, &f, &g, a.cells)?,
        "closed" => gaussian_closed_form(metric, &f, &g)
            .ok_or_else(|| Failure::Invalid("closed forms need two Gaussians with equal covariance".into()))?,
        m => return Err(Failure::Invalid(format!("unknown method '{m}' (mc, grid, closed)"))),
    };
    outln!("value,stderr,method,draws");
    outln!("{}", est.csv_line());
    Ok(())
}

fn apply(cfg: &mut ExperimentConfig, a: &SweepArgs) -> Result<(), Failure> {
    if let Some(d) = a.d {
        cfg.d = d;
    }
    if let Some(f) = &a.f0 {
        cfg.f0 = f.parse().map_err(Failure::Invalid)?;
    }
    if let Some(g) = &a.n_grid {
        let grid: Result<Vec<usize>, _> = g.split(',').map(|t| t.trim().parse::<usize>()).collect();
        cfg.n_grid = grid.map_err(|e| Failure::Invalid(format!("n-grid '{g}': {e}")))?;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(f) = &a.family {
        cfg.family = f.clone();
    }
    if let Some(b) = a.budget {
        cfg.distance_budget = b;
    }
    if let Some(t) = a.tolerance {
        cfg.tolerance = t;
    }
    if let Some(m) = a.max_iterations {
        cfg.max_iterations = m;
    }
    cfg.validate()?;
    Ok(())
}

fn rate(mut cfg: ExperimentConfig, a: &SweepArgs) -> Result<(), Failure> {
    cfg.kind = ExperimentKind::Rate;
    apply(&mut cfg, a)?;
    let res = run_rate_experiment(&cfg)?;
    eprintln!("{}: {} rows, {} new", res.path.display(), res.rows.len(), res.new_rows);
    outln!("n,median_h2,replicates");
    for (n, m) in res.medians() {
        let k = res.rows.iter().filter(|r| r.n == n).count();
        outln!("{n},{m},{k}");
    }
    match res.slope() {
        Ok(fit) => outln!("# slope={:.4} intercept={:.4} r2={:.4} guarantee={:.4}", fit.slope, fit.intercept, fit.r_squared, -2.0 / (cfg.d as f64 + 3.0)),
        Err(e) => outln!("# slope unavailable: {e}"),
    }
    if a.plot {
        for p in emit_plots(PlotInput::Rate(&res), &PlotStyle::default(), &cfg.out_dir)? {
            eprintln!("{}", p.display());
        }
    }
    let flagged = res.flagged();
    if flagged > 0 {
        return Err(Failure::Nonconverged(format!("{flagged} of {} rows are flagged", res.rows.len())));
    }
    Ok(())
}

fn discrepancy(mut cfg: ExperimentConfig, a: &SweepArgs) -> Result<(), Failure> {
    cfg.kind = ExperimentKind::Discrepancy;
    apply(&mut cfg, a)?;
    let res = run_discrepancy_sweep(&cfg)?;
    eprintln!("{}: {} rows, {} new", res.path.display(), res.rows.len(), res.new_rows);
    outln!("n,replicate,sup,stderr,family,seed");
    for r in &res.rows {
        outln!("{},{},{},{},{},{}", r.n, r.replicate, r.sup, r.stderr, r.family, r.seed);
    }
    if a.plot {
        for p in emit_plots(PlotInput::Discrepancy(&res), &PlotStyle::default(), &cfg.out_dir)? {
            eprintln!("{}", p.display());
        }
    }
    Ok(())
}

fn planar_set(name: &str) -> Result<Option<logconcave::PolytopeV>, Failure> {
    let corners: Vec<[f64; 2]> = match name {
        "square" => vec![[-10.0, -10.0], [10.0, -10.0], [10.0, 10.0], [-10.0, 10.0]],
        "half" => vec![[-10.0, -10.0], [0.0, -10.0], [0.0, 10.0], [-10.0, 10.0]],
        "triangle" => vec![[-2.0, -1.0], [2.0, -1.0], [0.0, 2.0]],
        "empty" => return Ok(None),
        s => return Err(Failure::Invalid(format!("unknown set '{s}' (square, half, triangle, empty)"))),
    };
    let pts: Vec<Point> = corners.into_iter().map(Point::from).collect();
    convex_hull(&pts).map(Some).map_err(|e| Failure::Runtime(e.to_string()))
}

fn sandwich(cfg: &ExperimentConfig, a: &SandwichArgs) -> Result<(), Failure> {
    let s = schedule(a.n, a.eps, a.tau, 2)?;
    let facets = a.facets.unwrap_or(sandwich_facets(2, s.delta, 1.0) as usize);
    let c = planar_set(&a.set)?;
    let f0 = DensityModel::standard_gaussian(2);
    let sw = sandwich_construct(&f0, c.as_ref(), &s, facets)?;
    let v = sw.verify(&f0, a.probes, &mut stream(cfg.seed, 0));
    outln!("level,level_area,inner_area,outer_area");
    for r in &sw.reports {
        outln!("{},{},{},{}", r.level, r.level_area, r.inner_area, r.outer_area);
    }
    outln!("# levels={} (schedule {}) facets={} delta={:e}", sw.levels, sandwich_levels(a.n, a.tau), sw.facets, sw.delta);
    outln!("# probes={} violations={}", v.probes, v.violations);
    outln!("# gap_inner={:e} stderr={:e}", v.gap_inner, v.gap_inner_stderr);
    outln!("# gap_outer={:e} stderr={:e}", v.gap_outer, v.gap_outer_stderr);
    outln!("# gaps_below_half_delta={}", v.gaps_below(sw.delta / 2.0));
    Ok(())
}

fn bounds(a: &BoundsArgs) -> Result<(), Failure> {
    let r = sample_bounds(a.d, a.eps, a.tau)?;
    let mut rows: Vec<[String; 4]> = vec![
        ["N1".into(), r.n1.to_string(), "((d^2/eps) ln^3(d/(eps tau)))^((d+3)/2)".into(), "theta_N1 c_prime".into()],
        ["N2".into(), r.n2.to_string(), "((2^d d^(2d+3)/eps) ln^(d+1)(d^(d+1)/(eps tau)))^((d+5)/2)".into(), "theta_N2 O_N2 c b".into()],
        ["rate_exponent".into(), format!("{}", r.rate_exponent), "(d+3)/2".into(), String::new()],
        ["minimax_lower_bound".into(), format!("{:e}", r.lower_bound), "(1/eps)^((d+1)/2) [external result]".into(), "omega_lower".into()],
        ["facets_at_N1".into(), r.facets.to_string(), "ceil((10 kappa d / delta)^((d-1)/2))".into(), "kappa".into()],
        ["levels_at_N1".into(), r.levels.to_string(), "ceil(ln(100 n^4 / tau))".into(), String::new()],
        ["vc_polytopes_log2".into(), r.vc.polytope_bound.to_string(), "ceil(2 (d+1) H log2((d+1) H))".into(), String::new()],
        ["vc_polytopes_ln".into(), r.vc.polytope_bound_ln.to_string(), "ceil(2 (d+1) H ln((d+1) H))".into(), String::new()],
        ["vc_combos".into(), r.vc.combo_bound.to_string(), "min V >= 3 with V / log2 V >= d (2L) H".into(), "O_combo".into()],
        ["mle_max_threshold".into(), format!("{}", r.mle_max_threshold), "4 ln(100 n^4 / tau^2)".into(), String::new()],
    ];
    for c in vc_consistency(a.d, a.eps, a.tau)? {
        rows.push([
            format!("consistency_{}", c.family),
            format!("{} ({:e} vs {:e})", if c.holds { "holds" } else { "fails" }, c.lhs, c.rhs),
            format!("sqrt(V/n) <= delta/10 at n = {}", c.n),
            "C_vc alpha".into(),
        ]);
    }
    for c in &r.ledger {
        rows.push([format!("constant_{}", c.name), format!("{}", c.value), c.replaces.into(), "ledger".into()]);
    }
    if a.csv {
        outln!("quantity,value,formula,constants");
        let q = |s: &str| if s.contains(',') || s.contains('"') { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() };
        for r in &rows {
            outln!("{}", r.iter().map(|s| q(s)).collect::<Vec<_>>().join(","));
        }
    } else {
        outln!("d = {}, eps = {}, tau = {}", a.d, a.eps, a.tau);
        let w0 = rows.iter().map(|r| r[0].len()).max().unwrap_or(0);
        let w1 = rows.iter().map(|r| r[1].len()).max().unwrap_or(0);
        let w2 = rows.iter().map(|r| r[2].len()).max().unwrap_or(0);
        outln!("{:w0$}  {:w1$}  {:w2$}  {}", "quantity", "value", "formula", "constants");
        for r in &rows {
            outln!("{:w0$}  {:w1$}  {:w2$}  {}", r[0], r[1], r[2], r[3]);
        }
    }
    Ok(())
}

fn plot(cfg: &ExperimentConfig, a: &PlotArgs) -> Result<(), Failure> {
    let head = std::fs::read_to_string(&a.input).map_err(|e| Failure::Invalid(format!("{}: {e}", a.input.display())))?;
    let style = PlotStyle { width: a.width, height: a.height, show_replicates: !a.no_replicates, ..PlotStyle::default() };
    let paths: Vec<PathBuf> = if head.starts_with("d,f0,") {
        let r = ExperimentResult::from_csv(&a.input)?;
        emit_plots(PlotInput::Rate(&r), &style, &cfg.out_dir)?
    } else if head.starts_with("n,replicate,") {
        let r = DiscrepancyResult::from_csv(&a.input)?;
        emit_plots(PlotInput::Discrepancy(&r), &style, &cfg.out_dir)?
    } else {
        return Err(Failure::Invalid(format!("{}: not a rate or discrepancy CSV", a.input.display())));
    };
    for p in paths {
        outln!("{}", p.display());
    }
    Ok(())
}

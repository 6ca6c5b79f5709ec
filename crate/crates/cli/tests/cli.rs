use std::path::Path;
use std::process::{Command, Output};

fn lcmle(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcmle")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn sample_then_fit_writes_a_tent_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let s = lcmle(dir.path(), &["--seed", "4", "sample", "-n", "120", "--output", "x.csv"]);
    assert_eq!(s.status.code(), Some(0));
    let f = lcmle(dir.path(), &["--out", "fits", "fit", "x.csv"]);
    assert_eq!(f.status.code(), Some(0), "{}", String::from_utf8_lossy(&f.stderr));
    let tent = std::fs::read_to_string(dir.path().join("fits/fit.tent")).unwrap();
    let (t, footer) = logconcave::densities::parse_tent(&tent).unwrap();
    assert_eq!(t.dim(), 1);
    for key in ["objective", "iterations", "mass", "subgradient_norm"] {
        assert!(footer.iter().any(|(k, _)| k == key), "missing {key}");
    }
    assert!(stdout(&f).contains("converged=true"));
}

#[test]
fn same_seed_same_sample() {
    let dir = tempfile::tempdir().unwrap();
    let a = lcmle(dir.path(), &["--seed", "9", "sample", "--density", "laplace", "-d", "2", "-n", "5"]);
    let b = lcmle(dir.path(), &["--seed", "9", "sample", "--density", "laplace", "-d", "2", "-n", "5"]);
    let c = lcmle(dir.path(), &["--seed", "10", "sample", "--density", "laplace", "-d", "2", "-n", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(stdout(&a).lines().count(), 5);
}

#[test]
fn distance_prints_one_csv_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcmle(dir.path(), &["distance", "gaussian", "gaussian:1,0", "-d", "2", "--method", "closed"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value,stderr,method,draws"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let h2 = 1.0 - (-1.0f64 / 8.0).exp();
    assert!((row[0].parse::<f64>().unwrap() - h2).abs() < 1e-12);
    assert_eq!(row[2], "closed-form");
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["bounds", "--eps", "1.5"],
        vec!["rate-experiment", "--n-grid", "50,20"],
        vec!["distance", "gaussian", "wobbly"],
        vec!["fit", "missing.csv"],
        vec!["--threads", "0", "bounds"],
        vec!["sample", "-n", "3", "--density", "circle"],
    ] {
        let o = lcmle(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert_eq!(lcmle(dir.path(), &["no-such-command"]).status.code(), Some(2));
}

#[test]
fn unconverged_fit_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    lcmle(dir.path(), &["sample", "-n", "200", "--output", "x.csv"]);
    let o = lcmle(dir.path(), &["fit", "x.csv", "--max-iterations", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("converged=false"));
}

#[test]
fn rate_experiment_resumes_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--out", "r", "--threads", "1", "rate-experiment", "--n-grid", "30,60,120", "--replicates", "2", "--budget", "1000", "--plot"];
    let o = lcmle(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("# slope="));
    let csv = dir.path().join("r/rate-d1-gaussian-seed0.csv");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 7);
    assert!(dir.path().join("r/rate-d1-gaussian.svg").exists());
    let again = lcmle(dir.path(), &args);
    assert!(String::from_utf8_lossy(&again.stderr).contains("0 new"));
    let p = lcmle(dir.path(), &["--out", "p", "plot", "r/rate-d1-gaussian-seed0.csv"]);
    assert_eq!(p.status.code(), Some(0));
    let svg = std::fs::read_to_string(dir.path().join("p/rate-d1-gaussian.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="median""#).count(), 3);
}

#[test]
fn config_file_drives_a_discrepancy_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let conf = "[experiment]\nkind = discrepancy\nd = 2\nf0 = circle\nn_grid = 10, 20\nreplicates = 1\nfamily = hulls:10\n\n[output]\nseed = 5\ndir = sweep\n";
    std::fs::write(dir.path().join("c.conf"), conf).unwrap();
    let o = lcmle(dir.path(), &["--config", "c.conf", "discrepancy"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("n,replicate,sup,stderr,family,seed\n"));
    let sups: Vec<f64> = text.lines().skip(1).map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(sups.len(), 2);
    assert!(sups[0] > 1.0 - 1e-9, "{sups:?}");
    assert!(sups[1] >= 0.5 - 1e-9, "{sups:?}");
    assert!(dir.path().join("sweep/discrepancy-d2-circle-hulls_10-seed5.csv").exists());
    let too_big = lcmle(dir.path(), &["--config", "c.conf", "discrepancy", "--family", "hulls:11"]);
    assert_eq!(too_big.status.code(), Some(2));
}

#[test]
fn bounds_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let t = stdout(&lcmle(dir.path(), &["bounds", "-d", "1"]));
    assert!(t.lines().any(|l| l.starts_with("N1 ") && l.contains("953837")));
    let c = stdout(&lcmle(dir.path(), &["bounds", "-d", "1", "--csv"]));
    assert_eq!(c.lines().next(), Some("quantity,value,formula,constants"));
    assert!(c.contains("N1,953837,"));
    assert!(c.contains("external result"));
}

#[test]
fn sandwich_demo_reports_levels() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcmle(dir.path(), &["sandwich-demo", "-n", "1000", "--facets", "64", "--probes", "2000", "--set", "triangle"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("level,level_area,inner_area,outer_area\n"));
    let levels = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(levels as u64, logconcave::bounds::sandwich_levels(1000, 0.1));
    assert!(text.contains("# probes=4000 violations=0"));
}

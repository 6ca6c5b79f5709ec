//! Resumable `(n, replicate)` sweeps. Each finished cell is handed to a
//! single sink that rewrites the CSV through a temporary file and a rename,
//! so the file on disk only ever holds complete rows.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::config::{DensitySpec, ExperimentConfig, ExperimentKind};
use super::slope::{fit_slope, SlopeFit};
use super::HarnessError;
use crate::distances::hellinger_sq;
use crate::empirical::{convex_discrepancy, DiscrepancyOptions, EmpiricalMeasure, SetFamilySpec, TrueMeasure};
use crate::mle::{fit_mle, SolverOptions};
use crate::rng::{derive_stream_id, stream};
use crate::timing::Stopwatch;

trait Row: Sized + Send {
    const HEADER: &'static str;
    fn key(&self) -> (usize, usize);
    fn to_csv(&self) -> String;
    fn from_csv(line: &str) -> Option<Self>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub d: usize,
    pub f0: String,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    /// NaN when the fit failed outright.
    pub h2: f64,
    pub stderr: f64,
    pub iterations: usize,
    pub status: String,
    /// The solver did not report convergence.
    pub flagged: bool,
    pub wall_time_s: f64,
}

impl Row for RateRow {
    const HEADER: &'static str = "d,f0,n,replicate,seed,h2,stderr,iterations,status,flagged,wall_time_s";

    fn key(&self) -> (usize, usize) {
        (self.n, self.replicate)
    }

    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.d,
            self.f0,
            self.n,
            self.replicate,
            self.seed,
            self.h2,
            self.stderr,
            self.iterations,
            self.status,
            self.flagged,
            self.wall_time_s
        )
    }

    fn from_csv(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return None;
        }
        Some(RateRow {
            d: f[0].parse().ok()?,
            f0: f[1].to_string(),
            n: f[2].parse().ok()?,
            replicate: f[3].parse().ok()?,
            seed: f[4].parse().ok()?,
            h2: f[5].parse().ok()?,
            stderr: f[6].parse().ok()?,
            iterations: f[7].parse().ok()?,
            status: f[8].to_string(),
            flagged: f[9].parse().ok()?,
            wall_time_s: f[10].parse().ok()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyRow {
    pub n: usize,
    pub replicate: usize,
    pub sup: f64,
    pub stderr: f64,
    pub family: String,
    pub seed: u64,
    /// The sup was taken over random members only.
    pub lower_bound: bool,
}

impl Row for DiscrepancyRow {
    const HEADER: &'static str = "n,replicate,sup,stderr,family,seed,lower_bound";

    fn key(&self) -> (usize, usize) {
        (self.n, self.replicate)
    }

    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n, self.replicate, self.sup, self.stderr, self.family, self.seed, self.lower_bound
        )
    }

    fn from_csv(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return None;
        }
        Some(DiscrepancyRow {
            n: f[0].parse().ok()?,
            replicate: f[1].parse().ok()?,
            sup: f[2].parse().ok()?,
            stderr: f[3].parse().ok()?,
            family: f[4].to_string(),
            seed: f[5].parse().ok()?,
            lower_bound: f[6].parse().ok()?,
        })
    }
}

fn load<T: Row>(path: &Path) -> Result<BTreeMap<(usize, usize), T>, HarnessError> {
    let mut rows = BTreeMap::new();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(rows),
        Err(e) => return Err(HarnessError::Io(format!("{}: {e}", path.display()))),
    };
    let mut lines = text.lines();
    if lines.next() != Some(T::HEADER) {
        return Err(HarnessError::Io(format!("{}: unexpected header", path.display())));
    }
    for (i, l) in lines.enumerate() {
        let row = T::from_csv(l).ok_or_else(|| HarnessError::Io(format!("{}: bad row {}", path.display(), i + 2)))?;
        rows.insert(row.key(), row);
    }
    Ok(rows)
}

fn persist<T: Row>(path: &Path, rows: &BTreeMap<(usize, usize), T>) -> std::io::Result<()> {
    let mut text = String::from(T::HEADER);
    text.push('\n');
    for r in rows.values() {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

/// Runs the cells missing from `path`. Returns the rows of this grid plus
/// the number of new ones; rows of other grids stay in the file.
fn run_cells<T, F>(cfg: &ExperimentConfig, path: &Path, cell: F) -> Result<(Vec<T>, usize), HarnessError>
where
    T: Row,
    F: Fn(usize, usize) -> T + Sync,
{
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| HarnessError::Io(format!("{}: {e}", cfg.out_dir.display())))?;
    let done: BTreeMap<(usize, usize), T> = load(path)?;
    let todo: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .filter(|k| !done.contains_key(k))
        .collect();
    let fresh = todo.len();
    let sink = Mutex::new((done, None::<std::io::Error>));
    let finish = |row: T| {
        let mut guard = sink.lock().unwrap_or_else(|p| p.into_inner());
        guard.0.insert(row.key(), row);
        if let Err(e) = persist(path, &guard.0) {
            guard.1.get_or_insert(e);
        }
    };
    run_tasks(&todo, cfg.threads, |&(n, r)| finish(cell(n, r)));
    let (rows, err) = sink.into_inner().unwrap_or_else(|p| p.into_inner());
    if let Some(e) = err {
        return Err(HarnessError::Io(format!("{}: {e}", path.display())));
    }
    if fresh == 0 && !path.exists() {
        persist(path, &rows)?;
    }
    let rows = rows.into_values().filter(|r| cfg.n_grid.contains(&r.key().0) && r.key().1 < cfg.replicates).collect();
    Ok((rows, fresh))
}

#[cfg(feature = "parallel")]
fn run_tasks<K: Sync, F: Fn(&K) + Sync>(todo: &[K], threads: Option<usize>, f: F) {
    use rayon::prelude::*;
    match threads.and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(|| todo.par_iter().for_each(&f)),
        None => todo.par_iter().for_each(&f),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_tasks<K: Sync, F: Fn(&K) + Sync>(todo: &[K], _threads: Option<usize>, f: F) {
    todo.iter().for_each(f);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Per-`n` median of the finite `h2` values, in increasing `n`.
pub fn medians(rows: &[RateRow]) -> Vec<(usize, f64)> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.h2.is_finite()) {
        by_n.entry(r.n).or_default().push(r.h2);
    }
    by_n.into_iter().map(|(n, v)| (n, median(v))).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub path: PathBuf,
    pub d: usize,
    pub f0: String,
    /// Sorted by `(n, replicate)`.
    pub rows: Vec<RateRow>,
    /// Rows computed by this call; the rest were already on disk.
    pub new_rows: usize,
}

impl ExperimentResult {
    pub fn medians(&self) -> Vec<(usize, f64)> {
        medians(&self.rows)
    }

    /// Reads a result file written by [`run_rate_experiment`].
    pub fn from_csv(path: &Path) -> Result<Self, HarnessError> {
        if !path.exists() {
            return Err(HarnessError::Io(format!("{}: no such file", path.display())));
        }
        let rows: Vec<RateRow> = load(path)?.into_values().collect();
        let first = rows.first().ok_or(HarnessError::EmptyResult)?;
        Ok(ExperimentResult { path: path.to_path_buf(), d: first.d, f0: first.f0.clone(), rows, new_rows: 0 })
    }

    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged).count()
    }

    /// Slope of median `h2` against `n` on log scales.
    pub fn slope(&self) -> Result<SlopeFit, HarnessError> {
        let pts: Vec<(f64, f64)> = self.medians().iter().map(|&(n, v)| (n as f64, v)).collect();
        fit_slope(&pts)
    }
}

pub fn rate_file_name(cfg: &ExperimentConfig) -> String {
    format!("rate-d{}-{}-seed{}.csv", cfg.d, cfg.f0.id(), cfg.seed)
}

/// Draws `n` points from `f0` on stream `(seed, [experiment, n, r])`, fits
/// the MLE and estimates `h^2(fhat, f0)` from the same stream. Cells already
/// in the output file are skipped. A failed or unconverged fit becomes a
/// flagged row.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    if cfg.kind != ExperimentKind::Rate {
        return Err(HarnessError::Config("not a rate experiment".into()));
    }
    let f0 = cfg.f0.build(cfg.d)?;
    let exp = cfg.experiment_id();
    let options = SolverOptions {
        tolerance: cfg.tolerance,
        max_iterations: cfg.max_iterations,
        experimental: cfg.d == 4,
        ..SolverOptions::default()
    };
    let id = cfg.f0.id();
    let path = cfg.out_dir.join(rate_file_name(cfg));
    let cell = |n: usize, r: usize| -> RateRow {
        let clock = Stopwatch::start();
        let mut rng = stream(cfg.seed, derive_stream_id(&[exp, n as u64, r as u64]));
        let x = f0.sample(&mut rng, n);
        let mut row = RateRow {
            d: cfg.d,
            f0: id.clone(),
            n,
            replicate: r,
            seed: cfg.seed,
            h2: f64::NAN,
            stderr: f64::NAN,
            iterations: 0,
            status: String::new(),
            flagged: true,
            wall_time_s: 0.0,
        };
        match fit_mle(&x, &options) {
            Ok(sol) => {
                row.iterations = sol.iterations;
                row.status = sol.status.to_string();
                row.flagged = !sol.converged;
                match hellinger_sq(&sol.model(), &f0, cfg.distance_budget, &mut rng) {
                    Ok(h) => {
                        row.h2 = h.value.clamp(0.0, 1.0);
                        row.stderr = h.stderr;
                    }
                    Err(e) => row.status = format!("distance-error: {e}"),
                }
            }
            Err(e) => row.status = format!("fit-error: {e}"),
        }
        row.status = row.status.replace([',', '\n'], ";");
        row.wall_time_s = clock.elapsed_secs();
        row
    };
    let (rows, new_rows) = run_cells(cfg, &path, cell)?;
    Ok(ExperimentResult { path, d: cfg.d, f0: id, rows, new_rows })
}

#[derive(Debug, Clone)]
pub struct DiscrepancyResult {
    pub path: PathBuf,
    pub rows: Vec<DiscrepancyRow>,
    pub new_rows: usize,
}

impl DiscrepancyResult {
    pub fn from_csv(path: &Path) -> Result<Self, HarnessError> {
        if !path.exists() {
            return Err(HarnessError::Io(format!("{}: no such file", path.display())));
        }
        let rows: Vec<DiscrepancyRow> = load(path)?.into_values().collect();
        if rows.is_empty() {
            return Err(HarnessError::EmptyResult);
        }
        Ok(DiscrepancyResult { path: path.to_path_buf(), rows, new_rows: 0 })
    }

    /// `(n, mean sup, stderr of the mean)` per `n`.
    pub fn curve(&self) -> Vec<(usize, f64, f64)> {
        let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            by_n.entry(r.n).or_default().push(r.sup);
        }
        by_n.into_iter()
            .map(|(n, v)| {
                let k = v.len() as f64;
                let mean = v.iter().sum::<f64>() / k;
                let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
                (n, mean, (var / k).sqrt())
            })
            .collect()
    }
}

/// Sup-deviation of the empirical measure over `cfg.family`, one row per
/// `(n, replicate)`.
pub fn run_discrepancy_sweep(cfg: &ExperimentConfig) -> Result<DiscrepancyResult, HarnessError> {
    cfg.validate()?;
    let fam: SetFamilySpec = cfg.family.parse().map_err(HarnessError::Config)?;
    let model = match cfg.f0 {
        DensitySpec::UnitCircle => None,
        _ => Some(cfg.f0.build(cfg.d)?),
    };
    let truth = match &model {
        Some(f) => TrueMeasure::Density(f),
        None => TrueMeasure::UnitCircle,
    };
    let exp = cfg.experiment_id();
    let family = cfg.family.replace(',', ";");
    let path = cfg.out_dir.join(format!(
        "discrepancy-d{}-{}-{}-seed{}.csv",
        cfg.d,
        cfg.f0.id(),
        family.replace(':', "_"),
        cfg.seed
    ));
    let opts = DiscrepancyOptions::default();
    let failure = Mutex::new(None);
    let cell = |n: usize, r: usize| -> DiscrepancyRow {
        let mut rng = stream(cfg.seed, derive_stream_id(&[exp, n as u64, r as u64]));
        let em = EmpiricalMeasure::new(truth.sample(&mut rng, n));
        let (sup, stderr, lower_bound) = match convex_discrepancy(truth, &em, &fam, &opts, &mut rng) {
            Ok(disc) => (disc.sup, disc.stderr, disc.lower_bound),
            Err(e) => {
                failure.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e.to_string());
                (f64::NAN, f64::NAN, true)
            }
        };
        DiscrepancyRow { n, replicate: r, sup, stderr, family: family.clone(), seed: cfg.seed, lower_bound }
    };
    let (rows, new_rows) = run_cells(cfg, &path, cell)?;
    if let Some(e) = failure.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(HarnessError::Experiment(e));
    }
    Ok(DiscrepancyResult { path, rows, new_rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let r = RateRow {
            d: 1,
            f0: "gaussian".into(),
            n: 10,
            replicate: 2,
            seed: 3,
            h2: 0.125,
            stderr: f64::NAN,
            iterations: 7,
            status: "converged".into(),
            flagged: false,
            wall_time_s: 0.5,
        };
        let back = RateRow::from_csv(&r.to_csv()).unwrap();
        assert_eq!(back.to_csv(), r.to_csv());
        assert!(RateRow::from_csv("1,2,3").is_none());
    }

    #[test]
    fn median_of_even_count() {
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
    }
}

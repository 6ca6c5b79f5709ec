//! Experiment configuration: flat `key = value` lines grouped under
//! `[section]` headers.
//!
//! ```text
//! [experiment]
//! kind = rate
//! d = 1
//! f0 = gaussian
//! n_grid = 100, 200, 400
//! replicates = 20
//!
//! [solver]
//! tolerance = 1e-6
//!
//! [distance]
//! budget = 100000
//!
//! [output]
//! seed = 7
//! dir = results
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use super::HarnessError;
use crate::densities::{parse_tent, DensityModel, ProductLaplace};
use crate::empirical::SetFamilySpec;

const KEYS: &[&str] = &[
    "experiment.kind",
    "experiment.d",
    "experiment.f0",
    "experiment.n_grid",
    "experiment.replicates",
    "experiment.family",
    "solver.tolerance",
    "solver.max_iterations",
    "distance.budget",
    "output.seed",
    "output.dir",
    "output.threads",
];

/// Reference densities by name.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    /// Standard Gaussian.
    Gaussian,
    /// Product of unit-scale Laplace marginals.
    Laplace,
    /// Uniform on `[-1, 1]^d`.
    Uniform,
    /// Tent read from a file written by [`crate::densities::write_tent`].
    TentFile(PathBuf),
    /// Uniform on the unit circle in the plane. Only a sampling law, so
    /// only discrepancy sweeps accept it.
    UnitCircle,
}

impl DensitySpec {
    pub fn id(&self) -> String {
        match self {
            DensitySpec::Gaussian => "gaussian".into(),
            DensitySpec::Laplace => "laplace".into(),
            DensitySpec::Uniform => "uniform".into(),
            DensitySpec::UnitCircle => "circle".into(),
            DensitySpec::TentFile(p) => {
                let stem = p.file_stem().map_or("tent".into(), |s| s.to_string_lossy().into_owned());
                format!("tent-{stem}")
            }
        }
    }

    pub fn build(&self, d: usize) -> Result<DensityModel, HarnessError> {
        let bad = |e: String| HarnessError::Config(format!("f0 '{}': {e}", self.id()));
        match self {
            DensitySpec::Gaussian => Ok(DensityModel::standard_gaussian(d)),
            DensitySpec::Laplace => Ok(ProductLaplace::new(vec![1.0; d]).map_err(|e| bad(e.to_string()))?.into()),
            DensitySpec::Uniform => DensityModel::uniform_box(&vec![-1.0; d], &vec![1.0; d]).map_err(|e| bad(e.to_string())),
            DensitySpec::UnitCircle => Err(bad("the unit circle has no density".into())),
            DensitySpec::TentFile(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| bad(e.to_string()))?;
                let (t, _) = parse_tent(&text).map_err(|e| bad(e.to_string()))?;
                if t.dim() != d {
                    return Err(bad(format!("tent has dimension {}, config says {d}", t.dim())));
                }
                Ok(t.into())
            }
        }
    }
}

impl std::str::FromStr for DensitySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "gaussian" | "normal" => Ok(DensitySpec::Gaussian),
            "laplace" => Ok(DensitySpec::Laplace),
            "uniform" => Ok(DensitySpec::Uniform),
            "circle" => Ok(DensitySpec::UnitCircle),
            t => match t.strip_prefix("tent:") {
                Some(path) if !path.is_empty() => Ok(DensitySpec::TentFile(path.into())),
                _ => Err(format!("unknown density '{t}' (gaussian, laplace, uniform, circle, tent:<file>)")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    /// Hellinger error of the MLE against `n`.
    Rate,
    /// Sup-deviation of the empirical measure over a set family.
    Discrepancy,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: usize,
    pub f0: DensitySpec,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// Used by discrepancy sweeps.
    pub family: String,
    pub distance_budget: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// `None` lets the worker pool pick.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Rate,
            d: 1,
            f0: DensitySpec::Gaussian,
            n_grid: vec![100, 200, 400, 800, 1600],
            replicates: 20,
            family: "halfspaces".into(),
            distance_budget: crate::distances::DEFAULT_BUDGET,
            tolerance: 1e-6,
            max_iterations: 500,
            seed: 0,
            out_dir: PathBuf::from("."),
            threads: None,
        }
    }
}

/// Reads `[section]` / `key = value` text into `section.key` entries.
/// `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut section = String::new();
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| HarnessError::Config(format!("line {}: unterminated section header", i + 1)))?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(HarnessError::Config(format!("line {}: duplicate key {key}", i + 1)));
        }
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| HarnessError::Config(format!("{key} = {v}: {e}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let kv = parse_key_values(text)?;
        let mut cfg = ExperimentConfig::default();
        for (k, v) in &kv {
            match k.as_str() {
                "experiment.kind" => {
                    cfg.kind = match v.as_str() {
                        "rate" => ExperimentKind::Rate,
                        "discrepancy" => ExperimentKind::Discrepancy,
                        _ => return Err(HarnessError::Config(format!("unknown experiment kind '{v}'"))),
                    }
                }
                "experiment.d" => cfg.d = num(k, v)?,
                "experiment.f0" => cfg.f0 = v.parse().map_err(HarnessError::Config)?,
                "experiment.n_grid" => {
                    cfg.n_grid = v.split(',').map(|t| num(k, t.trim())).collect::<Result<_, _>>()?;
                }
                "experiment.replicates" => cfg.replicates = num(k, v)?,
                "experiment.family" => cfg.family = v.clone(),
                "solver.tolerance" => cfg.tolerance = num(k, v)?,
                "solver.max_iterations" => cfg.max_iterations = num(k, v)?,
                "distance.budget" => cfg.distance_budget = num(k, v)?,
                "output.seed" => cfg.seed = num(k, v)?,
                "output.dir" => cfg.out_dir = PathBuf::from(v),
                "output.threads" => cfg.threads = Some(num(k, v)?),
                _ => {
                    return Err(HarnessError::Config(format!("unknown key '{k}' (known: {})", KEYS.join(", "))));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n_grid must be strictly increasing: {:?}", self.n_grid));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(1..=4).contains(&self.d) {
            return bad(format!("d = {} is outside 1..=4", self.d));
        }
        if !(self.tolerance > 0.0) {
            return bad("solver tolerance must be positive".into());
        }
        if self.distance_budget < crate::distances::MIN_BUDGET {
            return bad(format!("distance budget must be at least {}", crate::distances::MIN_BUDGET));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let fam: SetFamilySpec = self.family.parse().map_err(HarnessError::Config)?;
        if self.kind == ExperimentKind::Discrepancy {
            fam.validate(self.d, self.n_grid[0]).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        match (&self.f0, &self.kind) {
            (DensitySpec::TentFile(_), _) => {
                self.f0.build(self.d)?;
            }
            (DensitySpec::UnitCircle, ExperimentKind::Rate) => return bad("rate experiments need a density, not circle".into()),
            (DensitySpec::UnitCircle, _) if self.d != 2 => return bad("circle lives in d = 2".into()),
            _ => {}
        }
        Ok(())
    }

    /// Stable id for the experiment, part of every replicate's stream key.
    pub fn experiment_id(&self) -> u64 {
        let key = match self.kind {
            ExperimentKind::Rate => format!("rate/{}/{}", self.d, self.f0.id()),
            ExperimentKind::Discrepancy => format!("discrepancy/{}/{}/{}", self.d, self.f0.id(), self.family),
        };
        // FNV-1a
        key.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
    }
}

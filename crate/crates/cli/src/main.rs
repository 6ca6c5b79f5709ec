//! `lcmle`: fit log-concave MLEs, estimate distances and run the rate and
//! discrepancy experiments from the command line.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "lcmle", version, about = "Log-concave maximum likelihood estimation and sample-complexity experiments")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Experiment configuration file (`[section]` / `key = value`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the MLE to points read from a CSV file and write the tent.
    Fit(FitArgs),
    /// Draw points from a reference density as CSV.
    Sample(SampleArgs),
    /// Estimate a distance between two densities.
    Distance(DistanceArgs),
    /// Hellinger error of the MLE across a grid of sample sizes.
    RateExperiment(SweepArgs),
    /// Sup-deviation of the empirical measure over a set family.
    Discrepancy(SweepArgs),
    /// Build the multi-level sandwich around a planar convex set.
    SandwichDemo(SandwichArgs),
    /// Sample-size and VC bounds with the constants ledger.
    Bounds(BoundsArgs),
    /// Plot a rate or discrepancy CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Points, one per row; `-` reads stdin.
    pub input: PathBuf,
    /// Tent file to write (default `<out>/fit.tent`).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// Allow d = 4.
    #[arg(long)]
    pub experimental: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// gaussian, gaussian:<mean>, laplace, uniform, circle or tent:<file>.
    #[arg(long, default_value = "gaussian")]
    pub density: String,
    #[arg(short, long, default_value_t = 1)]
    pub d: usize,
    #[arg(short, long)]
    pub n: usize,
    /// CSV file to write instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    pub f: String,
    pub g: String,
    #[arg(short, long, default_value_t = 1)]
    pub d: usize,
    /// hellinger, tv or kl.
    #[arg(long, default_value = "hellinger")]
    pub metric: String,
    /// mc, grid or closed.
    #[arg(long, default_value = "mc")]
    pub method: String,
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    /// Cells per axis for the grid method.
    #[arg(long, default_value_t = 512)]
    pub cells: usize,
}

/// Flags override the configuration file.
#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    #[arg(short, long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub f0: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Set family for discrepancy sweeps.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Also write the SVG plot.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Args, Debug)]
pub struct SandwichArgs {
    /// Sample size fixing the schedule.
    #[arg(short, long, default_value_t = 1_000_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Facets per polytope (default: the budget with kappa = 1).
    #[arg(long)]
    pub facets: Option<usize>,
    /// square, half, triangle or empty.
    #[arg(long, default_value = "half")]
    pub set: String,
    /// Probes per verification stage.
    #[arg(long, default_value_t = 100_000)]
    pub probes: usize,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(short, long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Machine-readable output.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Rate or discrepancy CSV.
    pub input: PathBuf,
    #[arg(long, default_value_t = 640)]
    pub width: u32,
    #[arg(long, default_value_t = 440)]
    pub height: u32,
    #[arg(long)]
    pub no_replicates: bool,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Nonconverged(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Nonconverged(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Invalid(m) => format!("invalid input: {m}"),
                Failure::Nonconverged(m) => format!("nonconvergence: {m}"),
                Failure::Runtime(m) => format!("error: {m}"),
            };
            eprintln!("lcmle: {msg}");
            ExitCode::from(f.code())
        }
    }
}

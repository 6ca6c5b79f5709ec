//! Experiment orchestration: configuration, resumable sweeps persisted as
//! CSV, slope fits and SVG plots.

mod config;
mod plot;
mod slope;
mod sweep;

use thiserror::Error;

pub use config::{parse_key_values, DensitySpec, ExperimentConfig, ExperimentKind};
pub use plot::{emit_plots, PlotInput, PlotStyle};
pub use slope::{fit_slope, SlopeFit};
pub use sweep::{
    medians, rate_file_name, run_discrepancy_sweep, run_rate_experiment, DiscrepancyResult, DiscrepancyRow, ExperimentResult, RateRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("need at least 3 points, got {0}")]
    InsufficientPoints(usize),
    #[error("value {0} is not positive")]
    NonPositiveValue(f64),
    #[error("nothing to plot")]
    EmptyResult,
    #[error("{0}")]
    Experiment(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

//! Monte-Carlo harnesses: recovery phase transitions, BER sweeps over the
//! discrete model and the RF chain, quantization and run-time studies.

pub mod ber;
pub mod complexity;
pub mod config;
pub mod contour;
pub mod curves;
pub mod exec;
pub mod phase;
pub mod plot;
pub mod reference;
pub mod rng;
pub mod table;
pub mod validate;

use thiserror::Error;

pub use config::{Axis, CurveSpec, ExperimentKind, ExperimentSpec, Grid, PhaseSettings, StopRule};
pub use exec::Execution;
pub use table::{ResultRow, ResultTable, Summary};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Gold(#[from] crate::gold::GoldError),
    #[error(transparent)]
    Sampling(#[from] crate::sampling::SamplingError),
    #[error(transparent)]
    Pursuit(#[from] crate::pursuit::PursuitError),
    #[error(transparent)]
    Baseband(#[from] crate::baseband::BasebandError),
    #[error(transparent)]
    Rf(#[from] crate::rf::RfError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("results format: {0}")]
    Format(String),
    #[error("plot error: {0}")]
    Plot(String),
    #[error("reference data: {0}")]
    Reference(String),
}

impl ExperimentError {
    /// Configuration and input-format problems, as opposed to failures
    /// inside the numerical pipeline.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            ExperimentError::Config(_) | ExperimentError::Format(_) | ExperimentError::Json(_) | ExperimentError::Csv(_)
        )
    }
}

/// Run-time knobs that do not change results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Print a progress line per grid point to stderr.
    pub progress: bool,
}

/// Validates `spec` and runs the experiment it describes.
pub fn run(spec: &ExperimentSpec, options: &RunOptions) -> Result<ResultTable, ExperimentError> {
    spec.validate()?;
    match spec.experiment {
        ExperimentKind::Phase => phase::run_phase_transition(spec, options),
        ExperimentKind::Complexity => complexity::run_complexity(spec, options),
        ExperimentKind::BerDiscrete => ber::run_ber_discrete(spec, options),
        ExperimentKind::BerRf | ExperimentKind::Quantization => ber::run_ber_rf(spec, options),
    }
}

pub(crate) fn progress(options: &RunOptions, line: std::fmt::Arguments<'_>) {
    if options.progress {
        eprintln!("{line}");
    }
}

//! Pseudo-out-of-sample forecasting: predictive simulation from VAR draws,
//! the expanding-window experiment and its point and density metrics.

mod metrics;
mod predictive;
mod window;

pub use metrics::{
    compute_metrics, write_cumulative_csv, write_metrics_csv, CumulativePoint, JointRow, MetricRow, MetricTable,
    PointRule,
};
pub use predictive::{simulate_predictive, simulate_tiv, simulate_tvp, Predictive, PredictiveSet, EXPLOSIVE_BOUND};
pub use window::{run_expanding_window, write_records_csv, ForecastConfig, ForecastRecord, ForecastRun, OriginFailure};

use crate::artifact::ArtifactError;
use crate::numeric::NumericError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("every posterior draw produced an explosive forecast ({0} discarded)")]
    AllExplosive(usize),
    #[error("runs do not share origins: {0}")]
    OriginMismatch(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid forecast configuration: {0}")]
    Config(String),
    #[error("csv output failed: {0}")]
    Csv(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Pipeline(#[from] Box<crate::pipeline::PipelineError>),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

impl From<crate::pipeline::PipelineError> for ForecastError {
    fn from(e: crate::pipeline::PipelineError) -> Self {
        ForecastError::Pipeline(Box::new(e))
    }
}

pub type Result<T> = std::result::Result<T, ForecastError>;

pub(crate) fn csv_err(e: impl std::fmt::Display) -> ForecastError {
    ForecastError::Csv(e.to_string())
}

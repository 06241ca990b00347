//! Grouped sparse autoencoder with a spike-and-slab Lasso decoder mask.

mod adam;
mod arch;
mod crossval;
mod extract;
mod injectivity;
mod io;
mod model;
mod params;
mod ssl;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use arch::{Activation, Architecture};
pub use crossval::{cross_validate, CvCell, CvConfig, CvGrid, CvOutcome, FoldScheme};
pub use extract::extract_factors;
pub use injectivity::{check_injectivity, InjectivityReport, LayerRank};
pub use io::{write_b_heatmap_csv, write_loss_trace_csv};
pub use model::{decode, elbo, elbo_parts, encode, grad_elbo, reconstruct, ElboParts};
pub use params::{Dense, GsAeParams, ParamSet};
pub use ssl::{
    gamma_posterior, inclusion_probability, log_inclusion, log_laplace, ssl_penalty, ssl_penalty_grad, SslConfig,
};
pub use train::{fit_grouped, fit_plain, train, LossTrace, TrainConfig};

use crate::artifact::ArtifactError;
use crate::data::DataError;
use crate::factors::FactorError;
use crate::numeric::NumericError;

#[derive(Debug, thiserror::Error)]
pub enum GsAeError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    DivergedLoss { epoch: usize, batch: usize },
    #[error("cross-validation grid is empty")]
    EmptyGrid,
    #[error("extracted factor {0} has zero variance")]
    DegenerateFactor(usize),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

pub type Result<T> = std::result::Result<T, GsAeError>;

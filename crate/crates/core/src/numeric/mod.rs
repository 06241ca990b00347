//! Dense linear algebra, seeded sampling, regression and PCA kernels shared by
//! every other module. All arithmetic is `f64`; matrices are `nalgebra`
//! dynamically sized types.

mod linalg;
mod pca;
mod regression;
mod rng;
mod sampling;
pub mod stats;

pub use linalg::{
    cholesky, cholesky_jittered, ensure_finite, ensure_finite_vec, log_det_spd, spd_inverse, symmetrize, Jitter,
};
pub use pca::{pca, Pca};
pub use regression::{ar2_residual_variance, ols, ols_with_rank_check};
pub use rng::RngStream;
pub use sampling::{
    sample_inverse_wishart, sample_mvn, sample_mvn_jittered, sample_mvn_precision, sample_standard_normal_vec,
    sample_wishart,
};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("matrix is not positive definite (leading minor {minor} is {value:e})")]
    NotPositiveDefinite { minor: usize, value: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("degrees of freedom {dof} must exceed dimension - 1 = {min}")]
    DofTooSmall { dof: f64, min: f64 },
    #[error("design matrix is rank deficient (condition estimate {0:e})")]
    RankDeficient(f64),
    #[error("requested {k} components but at most {max} are available")]
    KOutOfRange { k: usize, max: usize },
    #[error("series of length {len} is too short (need at least {min})")]
    SeriesTooShort { len: usize, min: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

pub type Result<T> = std::result::Result<T, NumericError>;

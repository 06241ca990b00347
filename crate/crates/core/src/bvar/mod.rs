//! Bayesian VARs over the combined factor/observable block: a time-invariant
//! VAR with a Minnesota prior and a TVP-VAR with stochastic volatility.

mod diagnostics;
mod ffbs;
mod io;
pub mod ksc;
mod minnesota;
mod sim;
mod tiv;
mod tvp;

pub use diagnostics::{summarize_trace, write_diagnostics_csv, TraceSummary};
pub use ffbs::{ffbs, kalman_filter, rts_smooth, sample_psd, Filtered, Observation};
pub use minnesota::{ar2_scales, minnesota_variance, minnesota_variances};
pub use sim::{planted_drift_var, simulate_var, DriftingVar};
pub use tiv::{gibbs_tiv, TivDraws, TivPrior, TivSampler};
pub use tvp::{
    draw_coefficients, draw_covariance_rows, draw_indicators, draw_innovation_covs, draw_log_volatilities, h_inverse,
    structural_factor, tvp_mcmc, McmcConfig, TvpChain, TvpDraw, TvpPrior, TvpState,
};

use crate::artifact::ArtifactError;
use crate::numeric::{Matrix, NumericError, Vector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BvarError {
    #[error("{t} observations are too few for this VAR (need more than {need})")]
    TooShort { t: usize, need: usize },
    #[error("chain produced a non-finite draw at sweep {0}")]
    ChainDiverged(usize),
    #[error("Kalman filter covariance became non-finite at t = {0}")]
    FilterBlewUp(usize),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

pub type Result<T> = std::result::Result<T, BvarError>;

/// Responses and lagged regressors of a VAR(P) without intercept.
///
/// Row `t` of `x` is `(w_{t-1}ᵀ, …, w_{t-P}ᵀ)` for response row `w_t`; the
/// first `P` observations only serve as initial lags.
#[derive(Debug, Clone, PartialEq)]
pub struct VarData {
    pub y: Matrix,
    pub x: Matrix,
    pub lags: usize,
}

impl VarData {
    pub fn new(w: &Matrix, lags: usize) -> Result<Self> {
        if lags == 0 {
            return Err(BvarError::InvalidPrior("lag order must be at least 1".into()));
        }
        let (t, n) = w.shape();
        if t <= lags + 1 {
            return Err(BvarError::TooShort { t, need: lags + 1 });
        }
        let rows = t - lags;
        let y = w.rows(lags, rows).into_owned();
        let x = Matrix::from_fn(rows, n * lags, |r, c| {
            let (p, j) = (c / n, c % n);
            w[(lags + r - 1 - p, j)]
        });
        crate::numeric::ensure_finite(w, "VAR data")?;
        Ok(Self { y, x, lags })
    }

    pub fn n(&self) -> usize {
        self.y.ncols()
    }

    pub fn t(&self) -> usize {
        self.y.nrows()
    }

    /// Number of coefficients `P n²`.
    pub fn n_coef(&self) -> usize {
        self.n() * self.x.ncols()
    }
}

/// `n×nP` coefficient matrix `(A_1, …, A_P)` from `a = vec(Aᵀ)`, i.e. the
/// coefficients of equation `i` occupy `a[i nP .. (i+1) nP]`.
pub fn coef_matrix(a: &Vector, n: usize) -> Matrix {
    let cols = a.len() / n;
    Matrix::from_row_slice(n, cols, a.as_slice())
}

pub fn coef_vector(a: &Matrix) -> Vector {
    Vector::from_column_slice(a.transpose().as_slice())
}

/// One-step conditional mean `A x` for a lagged regressor row.
pub fn var_mean(a: &Matrix, lagged: &Vector) -> Vector {
    a * lagged
}

/// Regressor row `(w_Tᵀ, …, w_{T-P+1}ᵀ)` from the most recent `P` rows of `history`.
pub fn lagged_row(history: &Matrix, lags: usize) -> Vector {
    let (t, n) = history.shape();
    Vector::from_fn(n * lags, |c, _| history[(t - 1 - c / n, c % n)])
}

//! Factor sets, PCA factors, the slow-moving adjustment and the loading sampler.

mod alignment;
mod io;
mod loadings;
mod pca_factors;
mod slow;

pub use alignment::{align_factors, Alignment};
pub use io::{top_correlations, write_correlation_csv, Correlate};
pub use loadings::{gibbs_lambda_sigma, LoadingDraws};
pub use pca_factors::{pca_factors, PcaFactors};
pub use slow::slow_moving_adjust;

use crate::data::Quarter;
use crate::numeric::{Matrix, NumericError};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum FactorError {
    #[error("factor {0} has (near) zero variance")]
    Degenerate(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Artifact(#[from] crate::artifact::ArtifactError),
}

pub type Result<T> = std::result::Result<T, FactorError>;

/// Dimension-reduction method that produced a factor set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pca,
    PlainAe,
    GsAeLinear,
    GsAeNonlinear,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pca, Method::PlainAe, Method::GsAeLinear, Method::GsAeNonlinear];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::PlainAe => "plain_ae",
            Method::GsAeLinear => "gs_ae_linear",
            Method::GsAeNonlinear => "gs_ae_nonlinear",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method '{s}' (expected pca, plain_ae, gs_ae_linear or gs_ae_nonlinear)"))
    }
}

/// Latent factors `f_t` next to the observables `y_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    /// `T×K`.
    pub latent: Matrix,
    /// `T×M`.
    pub observable: Matrix,
    pub method: Method,
    pub latent_names: Vec<String>,
    pub observable_names: Vec<String>,
    /// Anchor group of each latent factor, when there is one.
    pub anchor_names: Option<Vec<String>>,
    pub dates: Vec<Quarter>,
}

impl FactorSet {
    pub fn t(&self) -> usize {
        self.latent.nrows()
    }

    pub fn k(&self) -> usize {
        self.latent.ncols()
    }

    pub fn m(&self) -> usize {
        self.observable.ncols()
    }

    /// `T×(K+M)` matrix with the latent factors ordered first.
    pub fn combined(&self) -> Matrix {
        let t = self.t();
        let k = self.k();
        Matrix::from_fn(t, k + self.m(), |r, c| if c < k { self.latent[(r, c)] } else { self.observable[(r, c - k)] })
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.latent_names.iter().chain(&self.observable_names).cloned().collect()
    }

    pub fn check(&self) -> Result<()> {
        let t = self.latent.nrows();
        if self.observable.nrows() != t || self.dates.len() != t {
            return Err(FactorError::ShapeMismatch(format!(
                "latent has {t} rows, observables {}, dates {}",
                self.observable.nrows(),
                self.dates.len()
            )));
        }
        if self.latent_names.len() != self.k() || self.observable_names.len() != self.m() {
            return Err(FactorError::ShapeMismatch("factor names do not match columns".into()));
        }
        crate::numeric::ensure_finite(&self.latent, "latent factors")?;
        crate::numeric::ensure_finite(&self.observable, "observables")?;
        Ok(())
    }

    /// Rows `0..len`.
    pub fn head(&self, len: usize) -> FactorSet {
        FactorSet {
            latent: self.latent.rows(0, len).into_owned(),
            observable: self.observable.rows(0, len).into_owned(),
            dates: self.dates[..len].to_vec(),
            ..self.clone()
        }
    }
}

/// Centers and scales each column to unit population variance. Columns with
/// standard deviation below `1e-10` are reported as degenerate.
pub fn standardize_columns(m: &Matrix) -> Result<Matrix> {
    let (means, stds) = crate::numeric::stats::column_moments(m);
    let mut out = m.clone();
    for j in 0..m.ncols() {
        if !(stds[j] > 1e-10) {
            return Err(FactorError::Degenerate(j));
        }
        out.column_mut(j).add_scalar_mut(-means[j]);
        out.column_mut(j).scale_mut(1.0 / stds[j]);
    }
    Ok(out)
}

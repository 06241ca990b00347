//! Recursively identified impulse responses of the VAR block and their
//! mapping to the panel through the loadings.

use crate::bvar::{TivDraws, TvpChain};
use crate::factors::LoadingDraws;
use crate::numeric::stats::quantile_sorted;
use crate::numeric::{cholesky, Matrix, NumericError, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IrfError {
    #[error("shocked variable {target} must be ordered last among {n} for recursive identification")]
    BadOrdering { target: usize, n: usize },
    #[error("{var} VAR draws cannot be paired with {loadings} loading draws")]
    DrawCountMismatch { var: usize, loadings: usize },
    #[error("time index {t} outside 0..{len}")]
    TimeOutOfRange { t: usize, len: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("csv output failed: {0}")]
    Csv(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

pub type Result<T> = std::result::Result<T, IrfError>;

/// Structural shock to variable `target`, of `size` standardized units on impact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockSpec {
    pub target: usize,
    pub size: f64,
}

impl ShockSpec {
    /// A shock of `bps` basis points to a rate measured in percent whose
    /// standardization divided by `std`.
    pub fn basis_points(target: usize, bps: f64, std: f64) -> Self {
        Self { target, size: bps / 100.0 / std }
    }
}

/// Column `target` of the lower-triangular impact matrix, scaled so that the
/// target moves by exactly `shock.size` on impact.
pub fn impact_vector(impact: &Matrix, shock: &ShockSpec) -> Result<Vector> {
    let n = impact.nrows();
    if impact.ncols() != n {
        return Err(IrfError::Shape(format!("impact matrix is {}x{}", n, impact.ncols())));
    }
    if shock.target + 1 != n {
        return Err(IrfError::BadOrdering { target: shock.target, n });
    }
    let col = impact.column(shock.target);
    let own = col[shock.target];
    if !(own.abs() > 0.0) || !own.is_finite() {
        return Err(IrfError::Shape(format!("impact of the shocked variable on itself is {own}")));
    }
    Ok(col * (shock.size / own))
}

/// Responses at horizons `0..=horizons` (rows) of all variables (columns)
/// to `shock`, propagated with `(A_1, …, A_P)` held fixed.
pub fn irf_var(a: &Matrix, impact: &Matrix, shock: &ShockSpec, horizons: usize) -> Result<Matrix> {
    let n = impact.nrows();
    if a.nrows() != n || a.ncols() == 0 || !a.ncols().is_multiple_of(n) {
        return Err(IrfError::Shape(format!("coefficients {}x{} for {n} variables", a.nrows(), a.ncols())));
    }
    let lags = a.ncols() / n;
    let mut out = Matrix::zeros(horizons + 1, n);
    out.set_row(0, &impact_vector(impact, shock)?.transpose());
    for h in 1..=horizons {
        let mut r = Vector::zeros(n);
        for p in 1..=lags.min(h) {
            r += a.columns((p - 1) * n, n) * out.row(h - p).transpose();
        }
        out.set_row(h, &r.transpose());
    }
    Ok(out)
}

/// Panel responses `Λ · IRF` for each paired draw; `Λ` is `N×(K+M)`.
pub fn irf_panel(var_irfs: &[Matrix], loadings: &LoadingDraws) -> Result<Vec<Matrix>> {
    if var_irfs.len() != loadings.len() {
        return Err(IrfError::DrawCountMismatch { var: var_irfs.len(), loadings: loadings.len() });
    }
    var_irfs.iter().zip(&loadings.lambda).map(|(r, l)| panel_response(r, l)).collect()
}

/// Panel responses under a single loading matrix (e.g. the posterior mean).
pub fn irf_panel_fixed(var_irfs: &[Matrix], lambda: &Matrix) -> Result<Vec<Matrix>> {
    var_irfs.iter().map(|r| panel_response(r, lambda)).collect()
}

fn panel_response(r: &Matrix, lambda: &Matrix) -> Result<Matrix> {
    if lambda.ncols() != r.ncols() {
        return Err(IrfError::Shape(format!(
            "loadings have {} columns for {} VAR variables",
            lambda.ncols(),
            r.ncols()
        )));
    }
    Ok(r * lambda.transpose())
}

/// Posterior draws that supply coefficients and an impact matrix at a time
/// index.
pub trait StructuralSource: Sync {
    fn n_draws(&self) -> usize;
    /// Number of time indices, or `None` when parameters are constant.
    fn time_len(&self) -> Option<usize>;
    fn coefficients(&self, draw: usize, t: usize) -> Matrix;
    fn impact(&self, draw: usize, t: usize) -> Result<Matrix>;
}

impl StructuralSource for TivDraws {
    fn n_draws(&self) -> usize {
        self.len()
    }

    fn time_len(&self) -> Option<usize> {
        None
    }

    fn coefficients(&self, draw: usize, _t: usize) -> Matrix {
        self.a[draw].clone()
    }

    fn impact(&self, draw: usize, _t: usize) -> Result<Matrix> {
        Ok(cholesky(&self.omega[draw])?)
    }
}

impl StructuralSource for TvpChain {
    fn n_draws(&self) -> usize {
        self.len()
    }

    /// Path indices `0..=T`; index `t ≥ 1` is the `t`-th modelled quarter.
    fn time_len(&self) -> Option<usize> {
        self.draws.first().map(|d| d.a.len())
    }

    fn coefficients(&self, draw: usize, t: usize) -> Matrix {
        self.draws[draw].coefficients(t)
    }

    fn impact(&self, draw: usize, t: usize) -> Result<Matrix> {
        Ok(self.draws[draw].impact(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrfResult {
    pub times: Vec<usize>,
    pub horizons: usize,
    /// `responses[i][d]` is the `(H+1)×n` response of draw `d` at `times[i]`.
    pub responses: Vec<Vec<Matrix>>,
    pub q16: Vec<Matrix>,
    pub q50: Vec<Matrix>,
    pub q84: Vec<Matrix>,
}

/// Elementwise 16/50/84% quantiles over draws.
pub fn summarize(draws: &[Matrix]) -> (Matrix, Matrix, Matrix) {
    let (r, c) = draws[0].shape();
    let mut q = [Matrix::zeros(r, c), Matrix::zeros(r, c), Matrix::zeros(r, c)];
    let mut buf = vec![0.0; draws.len()];
    for i in 0..r {
        for j in 0..c {
            for (b, d) in buf.iter_mut().zip(draws) {
                *b = d[(i, j)];
            }
            buf.sort_by(|x, y| x.total_cmp(y));
            for (k, p) in [0.16, 0.5, 0.84].into_iter().enumerate() {
                q[k][(i, j)] = quantile_sorted(&buf, p);
            }
        }
    }
    let [a, b, c] = q;
    (a, b, c)
}

/// IRFs of every draw at each of `times`, with parameters held at their
/// time-`t` values over the horizon.
pub fn irf_over_time<S: StructuralSource>(
    src: &S,
    shock: &ShockSpec,
    horizons: usize,
    times: &[usize],
) -> Result<IrfResult> {
    if src.n_draws() == 0 {
        return Err(IrfError::Shape("no posterior draws".into()));
    }
    if let Some(len) = src.time_len() {
        if let Some(&t) = times.iter().find(|&&t| t >= len) {
            return Err(IrfError::TimeOutOfRange { t, len });
        }
    }
    let mut responses = Vec::with_capacity(times.len());
    let (mut q16, mut q50, mut q84) = (vec![], vec![], vec![]);
    for &t in times {
        let per_draw: Vec<Matrix> = (0..src.n_draws())
            .into_par_iter()
            .map(|d| irf_var(&src.coefficients(d, t), &src.impact(d, t)?, shock, horizons))
            .collect::<Result<_>>()?;
        let (a, b, c) = summarize(&per_draw);
        q16.push(a);
        q50.push(b);
        q84.push(c);
        responses.push(per_draw);
    }
    Ok(IrfResult { times: times.to_vec(), horizons, responses, q16, q50, q84 })
}

/// Tidy CSV `time,horizon,variable,q16,q50,q84` from per-time quantile
/// matrices; `labels[i]` names `times[i]`.
pub fn write_irf_csv<W: Write>(
    labels: &[String],
    names: &[String],
    q16: &[Matrix],
    q50: &[Matrix],
    q84: &[Matrix],
    out: W,
) -> Result<()> {
    let err = |e: csv::Error| IrfError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "horizon", "variable", "q16", "q50", "q84"]).map_err(err)?;
    for (i, label) in labels.iter().enumerate() {
        for h in 0..q50[i].nrows() {
            for (j, name) in names.iter().enumerate() {
                w.write_record([
                    label.as_str(),
                    &h.to_string(),
                    name,
                    &format!("{:e}", q16[i][(h, j)]),
                    &format!("{:e}", q50[i][(h, j)]),
                    &format!("{:e}", q84[i][(h, j)]),
                ])
                .map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| IrfError::Csv(e.to_string()))?;
    Ok(())
}

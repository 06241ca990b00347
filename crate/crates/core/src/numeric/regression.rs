use super::linalg::ensure_finite;
use super::{Matrix, NumericError, Result, Vector};

const MAX_CONDITION: f64 = 1e12;

/// Least-squares coefficients `p×q` for `y ≈ X β`, solved through a thin QR
/// factorization of `X`.
pub fn ols(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    ols_with_rank_check(x, y).map(|(beta, _)| beta)
}

/// Like [`ols`] but also returns the condition estimate `max|r_ii| / min|r_ii|`.
pub fn ols_with_rank_check(x: &Matrix, y: &Matrix) -> Result<(Matrix, f64)> {
    let (t, p) = x.shape();
    if y.nrows() != t {
        return Err(NumericError::ShapeMismatch(format!("design has {t} rows but response has {}", y.nrows())));
    }
    ensure_finite(x, "regression design")?;
    ensure_finite(y, "regression response")?;
    if t < p || p == 0 {
        return Err(NumericError::RankDeficient(f64::INFINITY));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond < MAX_CONDITION) {
        return Err(NumericError::RankDeficient(cond));
    }
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty).ok_or(NumericError::RankDeficient(cond))?;
    Ok((beta, cond))
}

/// Residual variance of an AR(2) fit with intercept, denominator `T - 2 - 3`.
/// A degenerate (e.g. constant) series falls back to a minimum-norm solution
/// and logs a warning; a constant series yields 0.
pub fn ar2_residual_variance(series: &[f64]) -> Result<f64> {
    let len = series.len();
    if len < 10 {
        return Err(NumericError::SeriesTooShort { len, min: 10 });
    }
    let rows = len - 2;
    let x = Matrix::from_fn(rows, 3, |r, c| match c {
        0 => 1.0,
        1 => series[r + 1],
        _ => series[r],
    });
    let y = Matrix::from_fn(rows, 1, |r, _| series[r + 2]);
    let beta = match ols(&x, &y) {
        Ok(b) => b,
        Err(NumericError::RankDeficient(cond)) => {
            log::warn!("AR(2) regressors are rank deficient (condition {cond:e}); using minimum-norm fit");
            x.clone().svd(true, true).solve(&y, 1e-12).map_err(|_| NumericError::RankDeficient(cond))?
        }
        Err(e) => return Err(e),
    };
    let resid: Vector = (y - x * beta).column(0).into_owned();
    Ok(resid.norm_squared() / (len - 2 - 3) as f64)
}

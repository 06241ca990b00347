use super::{FactorError, Result};
use crate::numeric::{ols, Matrix};

/// Removes the contemporaneous dependence of `fhat` on the observables:
/// regresses each column of `fhat` on `(1, fhat_slow, y)` and returns
/// `fhat - y B_y`, re-standardized. A column that `y` absorbs completely is
/// reported as degenerate.
pub fn slow_moving_adjust(fhat: &Matrix, fhat_slow: &Matrix, y: &Matrix) -> Result<Matrix> {
    let t = fhat.nrows();
    if fhat_slow.nrows() != t || y.nrows() != t {
        return Err(FactorError::ShapeMismatch(format!(
            "fhat has {t} rows, fhat_slow {}, y {}",
            fhat_slow.nrows(),
            y.nrows()
        )));
    }
    let ks = fhat_slow.ncols();
    let m = y.ncols();
    let design = Matrix::from_fn(t, 1 + ks + m, |r, c| {
        if c == 0 {
            1.0
        } else if c <= ks {
            fhat_slow[(r, c - 1)]
        } else {
            y[(r, c - 1 - ks)]
        }
    });
    let beta = ols(&design, fhat)?;
    let b_y = beta.rows(1 + ks, m);
    let adjusted = fhat - y * b_y;
    let (_, in_std) = crate::numeric::stats::column_moments(fhat);
    let (means, stds) = crate::numeric::stats::column_moments(&adjusted);
    let mut out = adjusted;
    for j in 0..out.ncols() {
        if !(stds[j] > 1e-8 * in_std[j].max(f64::MIN_POSITIVE)) {
            return Err(FactorError::Degenerate(j));
        }
        out.column_mut(j).add_scalar_mut(-means[j]);
        out.column_mut(j).scale_mut(1.0 / stds[j]);
    }
    Ok(out)
}

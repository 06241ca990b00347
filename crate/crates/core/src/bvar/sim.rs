use super::{coef_vector, lagged_row, Result};
use crate::numeric::{cholesky, Matrix, RngStream, Vector};

/// `T` observations of a stationary VAR with coefficients `(A_1, …, A_P)`
/// and Gaussian innovations, after `burn` discarded start-up periods.
pub fn simulate_var(a: &Matrix, omega: &Matrix, t: usize, burn: usize, rng: &mut RngStream) -> Result<Matrix> {
    let n = a.nrows();
    let lags = a.ncols() / n;
    let l = cholesky(omega)?;
    let total = t + burn + lags;
    let mut w = Matrix::zeros(total, n);
    for r in lags..total {
        let x = lagged_row(&w.rows(r - lags, lags).into_owned(), lags);
        let e = &l * Vector::from_fn(n, |_, _| rng.standard_normal());
        w.set_row(r, &(a * x + e).transpose());
    }
    Ok(w.rows(burn + lags, t).into_owned())
}

/// Simulated three-variable VAR(1) whose own-lag coefficients drift upwards
/// linearly over the sample while log volatilities follow random walks.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftingVar {
    pub w: Matrix,
    /// True coefficients generating row `r` (entry `r - 1`), `vec(Aᵀ)` layout.
    pub coefficients: Vec<Vector>,
    pub log_vol: Vec<Vector>,
}

pub fn planted_drift_var(t: usize, rng: &mut RngStream) -> DriftingVar {
    let n = 3;
    let hinv = Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, -0.3, 1.0, 0.0, 0.2, 0.1, 1.0]);
    let h = hinv.try_inverse().expect("unit lower triangular");
    let mut w = Matrix::zeros(t, n);
    let mut ls = Vector::zeros(n);
    let mut coefficients = Vec::with_capacity(t - 1);
    let mut log_vol = Vec::with_capacity(t - 1);
    for r in 1..t {
        let frac = r as f64 / t as f64;
        let mut a = Matrix::from_element(n, n, 0.05);
        for i in 0..n {
            a[(i, i)] = 0.05 + (0.8 - 0.1 * i as f64) * frac;
            ls[i] += 0.08 * rng.standard_normal();
        }
        let e = Vector::from_fn(n, |i, _| ls[i].exp() * rng.standard_normal());
        let next = &a * w.row(r - 1).transpose() + &h * e;
        w.set_row(r, &next.transpose());
        coefficients.push(coef_vector(&a));
        log_vol.push(ls.clone());
    }
    DriftingVar { w, coefficients, log_vol }
}

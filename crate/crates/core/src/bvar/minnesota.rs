use super::Result;
use crate::numeric::{ar2_residual_variance, Matrix, Vector};

/// Prior variance of the lag-`p` coefficient of variable `j` in equation `i`.
pub fn minnesota_variance(p: usize, i: usize, j: usize, xi1: f64, xi2: f64, sigma: &[f64]) -> f64 {
    let p2 = (p * p) as f64;
    if i == j {
        xi1 / p2
    } else {
        xi2 / p2 * sigma[i] / sigma[j]
    }
}

/// Prior variances in the `vec(Aᵀ)` coefficient layout.
pub fn minnesota_variances(n: usize, lags: usize, xi1: f64, xi2: f64, sigma: &[f64]) -> Vector {
    let per_eq = n * lags;
    Vector::from_fn(n * per_eq, |idx, _| {
        let (i, c) = (idx / per_eq, idx % per_eq);
        minnesota_variance(c / n + 1, i, c % n, xi1, xi2, sigma)
    })
}

/// AR(2) residual standard deviations of every column.
pub fn ar2_scales(w: &Matrix) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(w.ncols());
    for j in 0..w.ncols() {
        let col: Vec<f64> = w.column(j).iter().copied().collect();
        let v = ar2_residual_variance(&col)?;
        out.push(v.max(1e-12).sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let s = [2.0, 1.0];
        assert_eq!(minnesota_variance(1, 0, 0, 0.7, 0.1, &s), 0.7);
        assert_eq!(minnesota_variance(2, 1, 1, 0.7, 0.1, &s), 0.175);
        assert!((minnesota_variance(1, 0, 1, 0.7, 0.1, &s) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn layout() {
        let v = minnesota_variances(2, 2, 0.7, 0.1, &[2.0, 1.0]);
        // equation 0: lag1 (own, cross), lag2 (own, cross); then equation 1
        let expect = [0.7, 0.2, 0.175, 0.05, 0.05, 0.7, 0.0125, 0.175];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} {b}");
        }
    }
}

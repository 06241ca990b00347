use super::linalg::ensure_finite;
use super::{Matrix, NumericError, Result, Vector};

/// Principal components of a column-standardized `T×N` matrix.
#[derive(Debug, Clone)]
pub struct Pca {
    /// `T×K` component scores, `X · loadings`.
    pub scores: Matrix,
    /// `N×K` orthonormal loadings.
    pub loadings: Matrix,
    /// Variance carried by each component, `s_k² / T`, non-increasing.
    pub explained_variance: Vector,
    /// Share of total variance per component.
    pub explained_ratio: Vector,
}

/// PCA through the SVD of `x`. Each loading vector is signed so that its
/// largest-magnitude entry is positive.
pub fn pca(x: &Matrix, k: usize) -> Result<Pca> {
    let (t, n) = x.shape();
    let max = t.min(n);
    if k == 0 || k > max {
        return Err(NumericError::KOutOfRange { k, max });
    }
    ensure_finite(x, "pca input")?;
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap_or(std::cmp::Ordering::Equal)
    });
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let mut loadings = Matrix::zeros(n, k);
    let mut explained_variance = Vector::zeros(k);
    let mut explained_ratio = Vector::zeros(k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let mut v: Vector = v_t.row(idx).transpose();
        let pivot =
            v.iter().enumerate().fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, *x) } else { best });
        if pivot.1 < 0.0 {
            v.neg_mut();
        }
        loadings.set_column(col, &v);
        let s2 = svd.singular_values[idx].powi(2);
        explained_variance[col] = s2 / t as f64;
        explained_ratio[col] = if total > 0.0 { s2 / total } else { 0.0 };
    }
    let scores = x * &loadings;
    Ok(Pca { scores, loadings, explained_variance, explained_ratio })
}

use super::linalg::{cholesky_jittered, spd_inverse, symmetrize, Jitter};
use super::{Matrix, NumericError, Result, RngStream, Vector};

pub fn sample_standard_normal_vec(n: usize, rng: &mut RngStream) -> Vector {
    Vector::from_fn(n, |_, _| rng.standard_normal())
}

fn check_mvn_shapes(mean: &Vector, cov: &Matrix) -> Result<()> {
    if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
        return Err(NumericError::ShapeMismatch(format!(
            "mean has length {} but covariance is {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    Ok(())
}

/// `mean + L z` with `L Lᵀ = cov` and `z` standard normal. No jitter.
pub fn sample_mvn(mean: &Vector, cov: &Matrix, rng: &mut RngStream) -> Result<Vector> {
    sample_mvn_jittered(mean, cov, Jitter::None, rng)
}

pub fn sample_mvn_jittered(mean: &Vector, cov: &Matrix, jitter: Jitter, rng: &mut RngStream) -> Result<Vector> {
    check_mvn_shapes(mean, cov)?;
    let (l, _) = cholesky_jittered(cov, jitter)?;
    let z = sample_standard_normal_vec(mean.len(), rng);
    Ok(mean + l * z)
}

/// Draw from `N(precision⁻¹ rhs, precision⁻¹)` without forming the inverse.
/// Returns `(draw, mean)`.
pub fn sample_mvn_precision(precision: &Matrix, rhs: &Vector, rng: &mut RngStream) -> Result<(Vector, Vector)> {
    check_mvn_shapes(rhs, precision)?;
    let (l, _) = cholesky_jittered(precision, Jitter::Auto)?;
    let singular = || NumericError::NotPositiveDefinite { minor: 0, value: 0.0 };
    let w = l.solve_lower_triangular(rhs).ok_or_else(singular)?;
    let mean = l.tr_solve_lower_triangular(&w).ok_or_else(singular)?;
    let z = sample_standard_normal_vec(rhs.len(), rng);
    let dev = l.tr_solve_lower_triangular(&z).ok_or_else(singular)?;
    Ok((&mean + dev, mean))
}

/// Wishart draw with scale `scale` and (real) degrees of freedom `dof` via the
/// Bartlett decomposition.
pub fn sample_wishart(scale: &Matrix, dof: f64, rng: &mut RngStream) -> Result<Matrix> {
    let n = scale.nrows();
    let min = n as f64 - 1.0;
    if !(dof > min) {
        return Err(NumericError::DofTooSmall { dof, min });
    }
    let (l, _) = cholesky_jittered(scale, Jitter::Auto)?;
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = rng.chi_squared(dof - i as f64).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.standard_normal();
        }
    }
    let la = l * a;
    let mut w = &la * la.transpose();
    symmetrize(&mut w);
    Ok(w)
}

/// Inverse-Wishart draw `IW(scale, dof)` with density proportional to
/// `|Q|^{-(dof+n+1)/2} exp(-tr(scale Q⁻¹)/2)`, so that `E[Q] = scale / (dof - n - 1)`.
pub fn sample_inverse_wishart(scale: &Matrix, dof: f64, rng: &mut RngStream) -> Result<Matrix> {
    let n = scale.nrows();
    let min = n as f64 - 1.0;
    if !(dof > min) {
        return Err(NumericError::DofTooSmall { dof, min });
    }
    let scale_inv = spd_inverse(scale, Jitter::Auto)?;
    let w = sample_wishart(&scale_inv, dof, rng)?;
    spd_inverse(&w, Jitter::Auto)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mvn_is_reproducible() {
        let mean = Vector::zeros(2);
        let cov = Matrix::identity(2, 2);
        let a = sample_mvn(&mean, &cov, &mut RngStream::new(5, 0)).unwrap();
        let b = sample_mvn(&mean, &cov, &mut RngStream::new(5, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mvn_mean_within_four_standard_errors() {
        let mean = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let cov = Matrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        let mut rng = RngStream::new(17, 0);
        let draws = 50_000;
        let mut acc = Vector::zeros(3);
        for _ in 0..draws {
            acc += sample_mvn(&mean, &cov, &mut rng).unwrap();
        }
        acc /= draws as f64;
        for i in 0..3 {
            let se = (cov[(i, i)] / draws as f64).sqrt();
            assert!((acc[i] - mean[i]).abs() < 4.0 * se, "component {i}");
        }
    }

    #[test]
    fn singular_covariance_without_jitter_errors() {
        let mean = Vector::zeros(2);
        let cov = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            sample_mvn(&mean, &cov, &mut RngStream::new(1, 0)),
            Err(NumericError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn precision_form_mean_solves_system() {
        let p = Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = Vector::from_vec(vec![1.0, 2.0]);
        let (_, mean) = sample_mvn_precision(&p, &b, &mut RngStream::new(2, 0)).unwrap();
        assert!((&p * mean - b).amax() < 1e-12);
    }

    #[test]
    fn inverse_wishart_rejects_small_dof() {
        let v = Matrix::identity(3, 3);
        assert!(matches!(
            sample_inverse_wishart(&v, 2.0, &mut RngStream::new(1, 0)),
            Err(NumericError::DofTooSmall { .. })
        ));
    }

    #[test]
    fn inverse_wishart_is_bit_reproducible() {
        let v = Matrix::identity(3, 3) * 6.0;
        let a = sample_inverse_wishart(&v, 10.0, &mut RngStream::new(8, 2)).unwrap();
        let b = sample_inverse_wishart(&v, 10.0, &mut RngStream::new(8, 2)).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn wishart_mean_matches_scale_times_dof() {
        let s = Matrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        let dof = 7.0;
        let draws = 20_000;
        let mut rng = RngStream::new(21, 0);
        let mut acc = Matrix::zeros(2, 2);
        let mut sq = Matrix::zeros(2, 2);
        for _ in 0..draws {
            let w = sample_wishart(&s, dof, &mut rng).unwrap();
            sq += w.component_mul(&w);
            acc += w;
        }
        let mean = &acc / draws as f64;
        let var = &sq / draws as f64 - mean.component_mul(&mean);
        for i in 0..2 {
            for j in 0..2 {
                let se = (var[(i, j)] / draws as f64).sqrt();
                assert!((mean[(i, j)] - dof * s[(i, j)]).abs() < 4.0 * se);
            }
        }
    }
}

use super::{Matrix, NumericError, Result, Vector};

const SYMMETRY_TOL: f64 = 1e-10;

/// Jitter policy for Cholesky factorizations of covariance matrices that may
/// have lost definiteness to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Jitter {
    /// Factorize exactly as given.
    None,
    /// Add `1e-10 * trace / n * I`, escalating by x10 at most three times.
    Auto,
}

pub fn ensure_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NumericError::NonFinite(what))
    }
}

pub fn ensure_finite_vec(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericError::NonFinite(what))
    }
}

pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn check_square_symmetric(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(NumericError::ShapeMismatch(format!("expected square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    ensure_finite(m, "cholesky input")?;
    let scale = m.amax().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(NumericError::NotSymmetric(worst));
    }
    Ok(())
}

fn cholesky_unchecked(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(NumericError::NotPositiveDefinite { minor: j + 1, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = m`.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    check_square_symmetric(m)?;
    cholesky_unchecked(m)
}

/// Cholesky factor with optional diagonal jitter. Returns the factor and the
/// jitter that was finally added (0 when none was needed).
pub fn cholesky_jittered(m: &Matrix, jitter: Jitter) -> Result<(Matrix, f64)> {
    check_square_symmetric(m)?;
    let first = match cholesky_unchecked(m) {
        Ok(l) => return Ok((l, 0.0)),
        Err(e) => e,
    };
    if jitter == Jitter::None {
        return Err(first);
    }
    let n = m.nrows();
    let base = 1e-10 * m.trace().abs() / n as f64;
    if base == 0.0 {
        return Err(first);
    }
    let mut eps = base;
    for _ in 0..=3 {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += eps;
        }
        if let Ok(l) = cholesky_unchecked(&shifted) {
            log::debug!("cholesky needed jitter {eps:e}");
            return Ok((l, eps));
        }
        eps *= 10.0;
    }
    Err(first)
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky
/// factor. The result is exactly symmetric.
pub fn spd_inverse(m: &Matrix, jitter: Jitter) -> Result<Matrix> {
    let (l, _) = cholesky_jittered(m, jitter)?;
    let n = m.nrows();
    let linv = l
        .solve_lower_triangular(&Matrix::identity(n, n))
        .ok_or(NumericError::NotPositiveDefinite { minor: 0, value: 0.0 })?;
    let mut inv = linv.transpose() * linv;
    symmetrize(&mut inv);
    Ok(inv)
}

pub fn log_det_spd(m: &Matrix) -> Result<f64> {
    let l = cholesky(m)?;
    Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

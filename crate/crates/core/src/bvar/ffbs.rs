use super::{BvarError, Result};
use crate::numeric::{cholesky_jittered, spd_inverse, symmetrize, Jitter, Matrix, RngStream, Vector};

/// `y_t = Z_t α_t + ε_t`, `ε_t ~ N(0, R_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: Vector,
    pub z: Matrix,
    pub r: Matrix,
}

/// Filtered moments for `t = 0..=T`; index 0 is the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub means: Vec<Vector>,
    pub covs: Vec<Matrix>,
}

/// Kalman filter for the random walk `α_t = α_{t-1} + η_t`, `η_t ~ N(0, Q)`,
/// with `α_0 ~ N(m0, P0)` and observations at `t = 1..=T`. Uses the Joseph
/// form of the covariance update.
pub fn kalman_filter(obs: &[Observation], q: &Matrix, m0: &Vector, p0: &Matrix) -> Result<Filtered> {
    let d = m0.len();
    if q.shape() != (d, d) || p0.shape() != (d, d) {
        return Err(BvarError::ShapeMismatch(format!(
            "state dimension {d} with Q {:?} and P0 {:?}",
            q.shape(),
            p0.shape()
        )));
    }
    let mut means = Vec::with_capacity(obs.len() + 1);
    let mut covs = Vec::with_capacity(obs.len() + 1);
    means.push(m0.clone());
    covs.push(p0.clone());
    let eye = Matrix::identity(d, d);
    for (t, o) in obs.iter().enumerate() {
        if o.z.ncols() != d || o.z.nrows() != o.y.len() || o.r.shape() != (o.y.len(), o.y.len()) {
            return Err(BvarError::ShapeMismatch(format!(
                "observation {} does not conform to state dimension {d}",
                t + 1
            )));
        }
        let m_pred = &means[t];
        let p_pred = &covs[t] + q;
        let zp = &o.z * &p_pred;
        let mut s = &zp * o.z.transpose() + &o.r;
        symmetrize(&mut s);
        let s_inv = spd_inverse(&s, Jitter::Auto).map_err(|_| BvarError::FilterBlewUp(t + 1))?;
        let gain = zp.transpose() * s_inv;
        let innov = &o.y - &o.z * m_pred;
        let m = m_pred + &gain * innov;
        let ikz = &eye - &gain * &o.z;
        let mut p = &ikz * p_pred * ikz.transpose() + &gain * &o.r * gain.transpose();
        symmetrize(&mut p);
        if m.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(BvarError::FilterBlewUp(t + 1));
        }
        means.push(m);
        covs.push(p);
    }
    Ok(Filtered { means, covs })
}

/// `(P_t (P_t + Q)⁻¹, P_t + Q)` for the backward recursions. Falls back to a
/// pseudo-inverse when `P_t + Q` is singular (e.g. `Q = 0` with a degenerate
/// filtered covariance).
fn backward_gain(p: &Matrix, q: &Matrix) -> Matrix {
    let mut pred = p + q;
    symmetrize(&mut pred);
    let inv = match spd_inverse(&pred, Jitter::Auto) {
        Ok(inv) => inv,
        Err(_) => pred.clone().pseudo_inverse(1e-14).unwrap_or_else(|_| Matrix::zeros(p.nrows(), p.ncols())),
    };
    p * inv
}

/// Rauch–Tung–Striebel smoothed means and covariances for `t = 0..=T`.
pub fn rts_smooth(f: &Filtered, q: &Matrix) -> (Vec<Vector>, Vec<Matrix>) {
    let n = f.means.len();
    let mut means = f.means.clone();
    let mut covs = f.covs.clone();
    for t in (0..n - 1).rev() {
        let j = backward_gain(&f.covs[t], q);
        let pred = &f.covs[t] + q;
        means[t] = &f.means[t] + &j * (&means[t + 1] - &f.means[t]);
        let mut c = &f.covs[t] + &j * (&covs[t + 1] - pred) * j.transpose();
        symmetrize(&mut c);
        covs[t] = c;
    }
    (means, covs)
}

/// Gaussian draw that tolerates positive semi-definite (including zero)
/// covariances by clipping negative eigenvalues.
pub fn sample_psd(mean: &Vector, cov: &Matrix, rng: &mut RngStream) -> Result<Vector> {
    let d = mean.len();
    let z = Vector::from_fn(d, |_, _| rng.standard_normal());
    if let Ok((l, _)) = cholesky_jittered(cov, Jitter::Auto) {
        return Ok(mean + l * z);
    }
    let mut c = cov.clone();
    symmetrize(&mut c);
    let eig = c.symmetric_eigen();
    let root = Vector::from_fn(d, |i, _| eig.eigenvalues[i].max(0.0).sqrt());
    let draw = mean + &eig.eigenvectors * root.component_mul(&(eig.eigenvectors.transpose() * z));
    if draw.iter().any(|v| !v.is_finite()) {
        return Err(BvarError::FilterBlewUp(0));
    }
    Ok(draw)
}

/// Forward filtering, backward sampling: one draw of `α_{0:T}` from its joint
/// smoothing distribution.
pub fn ffbs(obs: &[Observation], q: &Matrix, m0: &Vector, p0: &Matrix, rng: &mut RngStream) -> Result<Vec<Vector>> {
    let f = kalman_filter(obs, q, m0, p0)?;
    let n = f.means.len();
    let mut path = vec![Vector::zeros(m0.len()); n];
    path[n - 1] = sample_psd(&f.means[n - 1], &f.covs[n - 1], rng)?;
    for t in (0..n - 1).rev() {
        let j = backward_gain(&f.covs[t], q);
        let mean = &f.means[t] + &j * (&path[t + 1] - &f.means[t]);
        let mut cov = &f.covs[t] - &j * &f.covs[t];
        symmetrize(&mut cov);
        path[t] = sample_psd(&mean, &cov, rng)?;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_obs(ys: &[f64], r: f64) -> Vec<Observation> {
        ys.iter()
            .map(|y| Observation {
                y: Vector::from_element(1, *y),
                z: Matrix::identity(1, 1),
                r: Matrix::from_element(1, 1, r),
            })
            .collect()
    }

    #[test]
    fn zero_q_gives_constant_path() {
        let obs = scalar_obs(&[1.0, 2.0, 0.5, 1.5], 1.0);
        let q = Matrix::zeros(1, 1);
        let path = ffbs(&obs, &q, &Vector::zeros(1), &Matrix::identity(1, 1), &mut RngStream::new(1, 0)).unwrap();
        for p in &path {
            assert!((p[0] - path[0][0]).abs() < 1e-6);
        }
        // the static posterior: precision 1 + 4, mean 5/5
        let f = kalman_filter(&obs, &q, &Vector::zeros(1), &Matrix::identity(1, 1)).unwrap();
        assert!((f.means[4][0] - 1.0).abs() < 1e-12);
        assert!((f.covs[4][(0, 0)] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn psd_sampler_handles_zero_covariance() {
        let m = Vector::from_vec(vec![1.0, -2.0]);
        let d = sample_psd(&m, &Matrix::zeros(2, 2), &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(d, m);
    }

    #[test]
    fn shape_errors() {
        let obs = scalar_obs(&[1.0], 1.0);
        assert!(kalman_filter(&obs, &Matrix::zeros(2, 2), &Vector::zeros(2), &Matrix::identity(2, 2)).is_err());
    }
}

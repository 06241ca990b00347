use super::minnesota::{ar2_scales, minnesota_variances};
use super::{coef_matrix, BvarError, Result, VarData};
use crate::numeric::{
    ols, sample_inverse_wishart, sample_mvn_precision, spd_inverse, symmetrize, Jitter, Matrix, RngStream, Vector,
};
use serde::{Deserialize, Serialize};

const HYPER_SHAPE: f64 = 0.01;
const HYPER_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TivPrior {
    /// Own-lag shrinkage.
    pub xi1: f64,
    /// Cross-lag shrinkage.
    pub xi2: f64,
    /// AR(2) residual standard deviations, one per variable.
    pub sigma: Vec<f64>,
    pub lags: usize,
    /// Random-walk Metropolis on `log ξ` under a Gamma(0.01, 0.01) hyperprior.
    pub sample_xi: bool,
    pub xi_step: f64,
}

impl TivPrior {
    /// `ξ = (0.7, 0.1)` with scales estimated from `w`.
    pub fn minnesota(w: &Matrix, lags: usize) -> Result<Self> {
        Ok(Self { xi1: 0.7, xi2: 0.1, sigma: ar2_scales(w)?, lags, sample_xi: false, xi_step: 0.3 })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.xi1 > 0.0 && self.xi2 > 0.0) || self.lags == 0 {
            return Err(BvarError::InvalidPrior(format!(
                "need xi > 0 and P >= 1 (xi = {}, {}; P = {})",
                self.xi1, self.xi2, self.lags
            )));
        }
        if self.sigma.len() != n || self.sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(BvarError::InvalidPrior("scale vector must be positive with one entry per variable".into()));
        }
        Ok(())
    }
}

/// Retained draws of a time-invariant VAR.
#[derive(Debug, Clone, PartialEq)]
pub struct TivDraws {
    pub n: usize,
    pub lags: usize,
    /// `n×nP` matrices `(A_1, …, A_P)`.
    pub a: Vec<Matrix>,
    pub omega: Vec<Matrix>,
    pub xi: Vec<[f64; 2]>,
    /// Metropolis acceptance rate for `ξ` when it is sampled.
    pub xi_acceptance: Option<f64>,
    /// Number of observations the chain conditioned on.
    pub t_obs: usize,
}

impl TivDraws {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn mean_coefficients(&self) -> Matrix {
        let mut acc = Matrix::zeros(self.n, self.n * self.lags);
        for a in &self.a {
            acc += a;
        }
        acc / self.a.len().max(1) as f64
    }
}

/// Full conditionals of the time-invariant VAR with cached cross products.
pub struct TivSampler<'a> {
    pub data: &'a VarData,
    xtx: Matrix,
    xty: Matrix,
}

impl<'a> TivSampler<'a> {
    pub fn new(data: &'a VarData) -> Self {
        let xt = data.x.transpose();
        Self { xtx: &xt * &data.x, xty: &xt * &data.y, data }
    }

    /// Precision `V̲⁻¹ + Ω⁻¹ ⊗ XᵀX` and right-hand side `vec(Xᵀ Y Ω⁻¹)` of
    /// `a | Ω` in the `vec(Aᵀ)` layout.
    fn precision(&self, omega_inv: &Matrix, prior_var: &Vector) -> (Matrix, Vector) {
        let n = self.data.n();
        let q = self.xtx.nrows();
        let mut prec = Matrix::zeros(n * q, n * q);
        for i in 0..n {
            for j in 0..n {
                let w = omega_inv[(i, j)];
                prec.view_mut((i * q, j * q), (q, q)).copy_from(&(&self.xtx * w));
            }
        }
        for (k, v) in prior_var.iter().enumerate() {
            prec[(k, k)] += 1.0 / v;
        }
        let b = &self.xty * omega_inv;
        let rhs = Vector::from_column_slice(b.as_slice());
        (prec, rhs)
    }

    /// Mean of `a | Ω, ξ`.
    pub fn conditional_mean(&self, omega: &Matrix, prior_var: &Vector) -> Result<Vector> {
        let omega_inv = spd_inverse(omega, Jitter::Auto)?;
        let (prec, rhs) = self.precision(&omega_inv, prior_var);
        let l = crate::numeric::cholesky_jittered(&prec, Jitter::Auto)?.0;
        let w = l.solve_lower_triangular(&rhs).expect("triangular factor has a positive diagonal");
        Ok(l.tr_solve_lower_triangular(&w).expect("triangular factor has a positive diagonal"))
    }

    pub fn step_coefficients(&self, omega: &Matrix, prior_var: &Vector, rng: &mut RngStream) -> Result<Vector> {
        let omega_inv = spd_inverse(omega, Jitter::Auto)?;
        let (prec, rhs) = self.precision(&omega_inv, prior_var);
        Ok(sample_mvn_precision(&prec, &rhs, rng)?.0)
    }

    pub fn residuals(&self, a: &Vector) -> Matrix {
        let am = coef_matrix(a, self.data.n());
        &self.data.y - &self.data.x * am.transpose()
    }

    /// `Ω ~ IW(Σ e eᵀ, T)`, i.e. `Ω⁻¹ ~ W((Σ e eᵀ)⁻¹, T)`.
    pub fn step_covariance(&self, a: &Vector, rng: &mut RngStream) -> Result<Matrix> {
        let e = self.residuals(a);
        let mut s = e.transpose() * &e;
        symmetrize(&mut s);
        Ok(sample_inverse_wishart(&s, self.data.t() as f64, rng)?)
    }
}

fn log_gamma_prior(x: f64) -> f64 {
    (HYPER_SHAPE - 1.0) * x.ln() - HYPER_RATE * x
}

/// Log density of `a` under the Minnesota prior, up to a constant.
fn log_coef_prior(a: &Vector, var: &Vector) -> f64 {
    a.iter().zip(var.iter()).map(|(x, v)| -0.5 * (v.ln() + x * x / v)).sum()
}

fn xi_step(a: &Vector, prior: &mut TivPrior, n: usize, rng: &mut RngStream) -> usize {
    let mut accepted = 0;
    for which in 0..2 {
        let current = [prior.xi1, prior.xi2];
        let mut proposal = current;
        proposal[which] = (current[which].ln() + prior.xi_step * rng.standard_normal()).exp();
        let target = |xi: [f64; 2]| {
            let v = minnesota_variances(n, prior.lags, xi[0], xi[1], &prior.sigma);
            log_coef_prior(a, &v) + log_gamma_prior(xi[which]) + xi[which].ln()
        };
        let log_ratio = target(proposal) - target(current);
        if rng.uniform().ln() < log_ratio {
            prior.xi1 = proposal[0];
            prior.xi2 = proposal[1];
            accepted += 1;
        }
    }
    accepted
}

/// Gibbs sampler alternating `a | Ω` and `Ω | a`, optionally with a
/// Metropolis step on `ξ`. Starts from the least-squares fit.
pub fn gibbs_tiv(w: &Matrix, prior: &TivPrior, n_burn: usize, n_draws: usize, rng: &mut RngStream) -> Result<TivDraws> {
    let data = VarData::new(w, prior.lags)?;
    let n = data.n();
    prior.validate(n)?;
    let need = prior.lags * n + 10;
    if data.t() <= need {
        return Err(BvarError::TooShort { t: data.t(), need });
    }
    let sampler = TivSampler::new(&data);
    let mut prior = prior.clone();
    let mut var = minnesota_variances(n, prior.lags, prior.xi1, prior.xi2, &prior.sigma);
    let mut omega = match ols(&data.x, &data.y) {
        Ok(b) => {
            let e = &data.y - &data.x * b;
            let mut s = e.transpose() * e / data.t() as f64;
            symmetrize(&mut s);
            s
        }
        Err(_) => Matrix::identity(n, n),
    };
    let mut out = TivDraws {
        n,
        lags: prior.lags,
        a: Vec::with_capacity(n_draws),
        omega: Vec::with_capacity(n_draws),
        xi: Vec::with_capacity(n_draws),
        xi_acceptance: None,
        t_obs: w.nrows(),
    };
    let mut accepted = 0usize;
    for sweep in 0..n_burn + n_draws {
        let a = sampler.step_coefficients(&omega, &var, rng)?;
        omega = sampler.step_covariance(&a, rng)?;
        if prior.sample_xi {
            accepted += xi_step(&a, &mut prior, n, rng);
            var = minnesota_variances(n, prior.lags, prior.xi1, prior.xi2, &prior.sigma);
        }
        if a.iter().chain(omega.iter()).any(|v| !v.is_finite()) {
            return Err(BvarError::ChainDiverged(sweep));
        }
        if sweep >= n_burn {
            out.a.push(coef_matrix(&a, n));
            out.omega.push(omega.clone());
            out.xi.push([prior.xi1, prior.xi2]);
        }
    }
    if prior.sample_xi {
        out.xi_acceptance = Some(accepted as f64 / (2 * (n_burn + n_draws)).max(1) as f64);
    }
    Ok(out)
}

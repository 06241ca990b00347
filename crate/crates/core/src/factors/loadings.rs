use super::{FactorError, FactorSet, Result};
use crate::numeric::{sample_mvn_precision, Matrix, RngStream, Vector};
use rayon::prelude::*;

/// Retained draws of the loading equation `x_t = Λ (f_t, y_t) + ε_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingDraws {
    /// Each `N×(K+M)`.
    pub lambda: Vec<Matrix>,
    /// Diagonal of `Σ`, each of length `N`.
    pub sigma2: Vec<Vector>,
}

impl LoadingDraws {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn mean_lambda(&self) -> Matrix {
        let mut acc = self.lambda[0].clone() * 0.0;
        for l in &self.lambda {
            acc += l;
        }
        acc / self.lambda.len() as f64
    }
}

const PRIOR_PRECISION: f64 = 0.25;
const GAMMA_SHAPE: f64 = 0.01;
const GAMMA_RATE: f64 = 0.01;

struct Chain {
    lambda: Vec<Vector>,
    sigma2: Vec<f64>,
}

fn run_equation(
    wtw: &Matrix,
    w: &Matrix,
    xi: &Vector,
    n_burn: usize,
    n_draws: usize,
    mut rng: RngStream,
) -> Result<Chain> {
    let t = w.nrows() as f64;
    let d = wtw.nrows();
    let wtx = w.transpose() * xi;
    let mut prec = 1.0;
    let mut out = Chain { lambda: Vec::with_capacity(n_draws), sigma2: Vec::with_capacity(n_draws) };
    for it in 0..n_burn + n_draws {
        let v_inv = Matrix::identity(d, d) * PRIOR_PRECISION + wtw * prec;
        let (lambda, _) = sample_mvn_precision(&v_inv, &(&wtx * prec), &mut rng)?;
        let ssr = (xi - w * &lambda).norm_squared();
        prec = rng.gamma(GAMMA_SHAPE + t / 2.0, GAMMA_RATE + ssr / 2.0);
        if !prec.is_finite() || prec <= 0.0 {
            return Err(FactorError::Numeric(crate::numeric::NumericError::NonFinite("loading precision draw")));
        }
        if it >= n_burn {
            out.lambda.push(lambda);
            out.sigma2.push(1.0 / prec);
        }
    }
    Ok(out)
}

/// Gibbs sampler for the loadings and idiosyncratic variances of each panel
/// column, with prior `vec(Λ) ~ N(0, 4I)` and `Σ_ii⁻¹ ~ Gamma(0.01, 0.01)`.
/// Equations are independent; equation `i` uses stream `i` of the seed in `rng`.
pub fn gibbs_lambda_sigma(
    factors: &FactorSet,
    x: &Matrix,
    n_burn: usize,
    n_draws: usize,
    rng: &RngStream,
) -> Result<LoadingDraws> {
    if x.nrows() != factors.t() {
        return Err(FactorError::ShapeMismatch(format!("panel has {} rows, factors {}", x.nrows(), factors.t())));
    }
    if n_draws == 0 {
        return Err(FactorError::ShapeMismatch("need at least one retained draw".into()));
    }
    let w = factors.combined();
    let wtw = w.transpose() * &w;
    let chains: Vec<Chain> = (0..x.ncols())
        .into_par_iter()
        .map(|i| {
            let xi: Vector = x.column(i).into_owned();
            run_equation(&wtw, &w, &xi, n_burn, n_draws, rng.substream(i as u64))
        })
        .collect::<Result<_>>()?;
    let n = x.ncols();
    let d = w.ncols();
    let mut lambda = Vec::with_capacity(n_draws);
    let mut sigma2 = Vec::with_capacity(n_draws);
    for s in 0..n_draws {
        lambda.push(Matrix::from_fn(n, d, |i, j| chains[i].lambda[s][j]));
        sigma2.push(Vector::from_fn(n, |i, _| chains[i].sigma2[s]));
    }
    Ok(LoadingDraws { lambda, sigma2 })
}

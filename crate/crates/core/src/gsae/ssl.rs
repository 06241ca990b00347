use super::{GsAeError, Result};
use crate::numeric::Matrix;
use serde::{Deserialize, Serialize};

/// Spike-and-slab Lasso hyperparameters. The Bernoulli prior on the
/// indicators is fixed at one half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SslConfig {
    /// Spike rate.
    pub lambda0: f64,
    /// Slab rate.
    pub lambda1: f64,
    #[serde(default)]
    pub hard_zero_anchors: bool,
}

impl Default for SslConfig {
    fn default() -> Self {
        Self { lambda0: 1000.0, lambda1: 1.0, hard_zero_anchors: false }
    }
}

impl SslConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0 && self.lambda0 >= self.lambda1 && self.lambda0.is_finite()) {
            return Err(GsAeError::InvalidConfig(format!(
                "need lambda0 >= lambda1 > 0 (got {}, {})",
                self.lambda0, self.lambda1
            )));
        }
        Ok(())
    }
}

/// `log ψ(β) = log(λ/2) - λ|β|`.
pub fn log_laplace(beta: f64, lambda: f64) -> f64 {
    (lambda / 2.0).ln() - lambda * beta.abs()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `log(ψ0/ψ1)` at `β`.
fn log_odds_spike(beta: f64, ssl: &SslConfig) -> f64 {
    (ssl.lambda0 / ssl.lambda1).ln() - (ssl.lambda0 - ssl.lambda1) * beta.abs()
}

/// `ψ1 / (ψ0 + ψ1)` evaluated as a logistic of the log-odds.
pub fn inclusion_probability(beta: f64, ssl: &SslConfig) -> f64 {
    1.0 / (1.0 + log_odds_spike(beta, ssl).exp())
}

/// `(log p, log(1 - p))` without cancellation.
pub fn log_inclusion(beta: f64, ssl: &SslConfig) -> (f64, f64) {
    let r = log_odds_spike(beta, ssl);
    (-softplus(r), -softplus(-r))
}

/// Inclusion probabilities for every cell of `B`; anchor rows `0..n_anchors`
/// are set to the identity pattern.
pub fn gamma_posterior(b: &Matrix, ssl: &SslConfig, n_anchors: usize) -> Matrix {
    Matrix::from_fn(b.nrows(), b.ncols(), |c, k| {
        if c < n_anchors {
            if c == k {
                1.0
            } else {
                0.0
            }
        } else {
            inclusion_probability(b[(c, k)], ssl)
        }
    })
}

fn xlogy(x: f64, log_y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * log_y
    }
}

/// `Σ_{c,k} p(log ψ1 - log p) + (1 - p)(log ψ0 - log(1 - p))`, unscaled,
/// with `0·log 0 = 0`.
pub fn ssl_penalty(b: &Matrix, p: &Matrix, ssl: &SslConfig) -> f64 {
    let mut acc = 0.0;
    for (beta, &pk) in b.iter().zip(p.iter()) {
        let q = 1.0 - pk;
        acc += xlogy(pk, log_laplace(*beta, ssl.lambda1)) - xlogy(pk, pk.ln())
            + xlogy(q, log_laplace(*beta, ssl.lambda0))
            - xlogy(q, q.ln());
    }
    acc
}

/// Subgradient of [`ssl_penalty`] in `β` with `sign(0) = 0`.
pub fn ssl_penalty_grad(beta: f64, p: f64, ssl: &SslConfig) -> f64 {
    let sign = if beta > 0.0 {
        1.0
    } else if beta < 0.0 {
        -1.0
    } else {
        0.0
    };
    -(p * ssl.lambda1 + (1.0 - p) * ssl.lambda0) * sign
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_rates_give_one_half() {
        let ssl = SslConfig { lambda0: 3.0, lambda1: 3.0, hard_zero_anchors: false };
        for beta in [0.0, 0.3, -2.0, 17.0] {
            assert_eq!(inclusion_probability(beta, &ssl), 0.5);
        }
    }

    #[test]
    fn zero_beta_default_rates() {
        let ssl = SslConfig::default();
        assert!((inclusion_probability(0.0, &ssl) - 1.0 / 1001.0).abs() < 1e-16);
    }

    #[test]
    fn log_inclusion_consistent() {
        let ssl = SslConfig::default();
        for beta in [0.0, 0.001, 0.01, 0.05, 0.5] {
            let p = inclusion_probability(beta, &ssl);
            let (lp, lq) = log_inclusion(beta, &ssl);
            assert!((lp.exp() - p).abs() < 1e-14);
            assert!((lq.exp() - (1.0 - p)).abs() < 1e-14);
        }
    }

    #[test]
    fn anchor_rows_forced() {
        let b = Matrix::from_element(4, 2, 0.3);
        let p = gamma_posterior(&b, &SslConfig::default(), 2);
        assert_eq!(p.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0]);
        assert_eq!(p.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0]);
        assert!(p[(3, 0)] > 0.99);
    }

    #[test]
    fn penalty_handles_degenerate_probabilities() {
        let b = Matrix::from_row_slice(1, 2, &[0.2, 0.0]);
        let p = Matrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let ssl = SslConfig::default();
        let expected = log_laplace(0.2, 1.0) + log_laplace(0.0, 1000.0);
        assert!((ssl_penalty(&b, &p, &ssl) - expected).abs() < 1e-12);
    }
}

use super::{ForecastError, Result};
use crate::bvar::{coef_matrix, lagged_row, structural_factor, TivDraws, TvpChain, TvpDraw};
use crate::numeric::stats::{log_sum_exp, normal_log_pdf, quantile, LN_2PI};
use crate::numeric::{cholesky, symmetrize, Matrix, RngStream, Vector};
use crate::pipeline::VarFit;

/// Forecasts whose mean exceeds this (in standardized units) are discarded.
pub const EXPLOSIVE_BOUND: f64 = 1e6;

/// Predictive distribution at one horizon: an equal-weight mixture of the
/// terminal conditional Gaussians of every retained draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictive {
    pub horizon: usize,
    pub means: Vec<Vector>,
    pub covs: Vec<Matrix>,
    /// One simulated outcome per draw.
    pub samples: Vec<Vector>,
}

impl Predictive {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Predictive mean of variable `i`.
    pub fn mean(&self, i: usize) -> f64 {
        self.means.iter().map(|m| m[i]).sum::<f64>() / self.len() as f64
    }

    /// Median of the simulated outcomes of variable `i`.
    pub fn median(&self, i: usize) -> f64 {
        let v: Vec<f64> = self.samples.iter().map(|s| s[i]).collect();
        quantile(&v, 0.5)
    }

    /// Log density of every mixture component of variable `i` at `value`.
    pub fn component_log_densities(&self, i: usize, value: f64) -> Vec<f64> {
        self.means.iter().zip(&self.covs).map(|(m, c)| normal_log_pdf(value, m[i], c[(i, i)])).collect()
    }

    /// Log of the marginal mixture density of variable `i` at `value`.
    pub fn log_density(&self, i: usize, value: f64) -> f64 {
        log_sum_exp(&self.component_log_densities(i, value)) - (self.len() as f64).ln()
    }

    /// Log of the joint mixture density of the variables `idx` at `values`.
    pub fn joint_log_density(&self, idx: &[usize], values: &[f64]) -> Result<f64> {
        let k = idx.len();
        let y = Vector::from_column_slice(values);
        let mut parts = Vec::with_capacity(self.len());
        for (m, c) in self.means.iter().zip(&self.covs) {
            let sub = Matrix::from_fn(k, k, |r, s| c[(idx[r], idx[s])]);
            let l = cholesky(&sub)?;
            let e = Vector::from_fn(k, |r, _| y[r] - m[idx[r]]);
            let z = l.solve_lower_triangular(&e).expect("positive diagonal");
            let log_det: f64 = l.diagonal().iter().map(|d| d.ln()).sum();
            parts.push(-0.5 * (k as f64 * LN_2PI + z.norm_squared()) - log_det);
        }
        Ok(log_sum_exp(&parts) - (self.len() as f64).ln())
    }
}

/// Predictive distributions for horizons `1..=h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSet {
    pub horizons: Vec<Predictive>,
    /// Draws dropped as explosive.
    pub discarded: usize,
}

/// Square root of a covariance that may be singular (including zero).
fn root(m: &Matrix) -> Matrix {
    if let Ok(l) = cholesky(m) {
        return l;
    }
    let mut c = m.clone();
    symmetrize(&mut c);
    let eig = c.symmetric_eigen();
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&d)
}

fn normals(n: usize, rng: &mut RngStream) -> Vector {
    Vector::from_fn(n, |_, _| rng.standard_normal())
}

fn push_lag(history: &mut Matrix, y: &Vector) {
    let t = history.nrows();
    for r in 0..t - 1 {
        let next = history.row(r + 1).into_owned();
        history.set_row(r, &next);
    }
    history.set_row(t - 1, &y.transpose());
}

fn explosive(m: &Vector) -> bool {
    m.iter().any(|v| !v.is_finite() || v.abs() > EXPLOSIVE_BOUND)
}

type Path = Vec<(Vector, Matrix, Vector)>;

fn tiv_path(a: &Matrix, omega: &Matrix, history: &Matrix, lags: usize, h: usize, rng: &mut RngStream) -> Option<Path> {
    let l = root(omega);
    let mut hist = history.rows(history.nrows() - lags, lags).into_owned();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let mean = a * lagged_row(&hist, lags);
        if explosive(&mean) {
            return None;
        }
        let y = &mean + &l * normals(mean.len(), rng);
        push_lag(&mut hist, &y);
        out.push((mean, omega.clone(), y));
    }
    Some(out)
}

fn tvp_path(d: &TvpDraw, history: &Matrix, lags: usize, h: usize, rng: &mut RngStream) -> Option<Path> {
    let n = d.n();
    let last = d.a.len() - 1;
    let (mut a, mut hv, mut ls) = (d.a[last].clone(), d.h[last].clone(), d.log_s[last].clone());
    let la = root(&d.q_a);
    let lh: Vec<Matrix> = d.q_h.iter().map(root).collect();
    let ls_root = root(&d.q_s);
    let mut hist = history.rows(history.nrows() - lags, lags).into_owned();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        a += &la * normals(a.len(), rng);
        let mut off = 0;
        for (m, l) in lh.iter().enumerate() {
            let step = l * normals(m + 1, rng);
            let mut block = hv.rows_mut(off, m + 1);
            block += step;
            off += m + 1;
        }
        ls += &ls_root * normals(n, rng);
        let mean = coef_matrix(&a, n) * lagged_row(&hist, lags);
        if explosive(&mean) {
            return None;
        }
        let impact = structural_factor(&hv, &ls);
        let cov = &impact * impact.transpose();
        let y = &mean + &impact * normals(n, rng);
        push_lag(&mut hist, &y);
        out.push((mean, cov, y));
    }
    Some(out)
}

fn collect(paths: impl Iterator<Item = Option<Path>>, h: usize) -> Result<PredictiveSet> {
    let mut horizons: Vec<Predictive> =
        (1..=h).map(|k| Predictive { horizon: k, means: vec![], covs: vec![], samples: vec![] }).collect();
    let mut discarded = 0;
    for p in paths {
        match p {
            Some(steps) => {
                for (k, (m, c, y)) in steps.into_iter().enumerate() {
                    horizons[k].means.push(m);
                    horizons[k].covs.push(c);
                    horizons[k].samples.push(y);
                }
            }
            None => discarded += 1,
        }
    }
    if horizons.first().is_none_or(|p| p.is_empty()) {
        return Err(ForecastError::AllExplosive(discarded));
    }
    Ok(PredictiveSet { horizons, discarded })
}

fn check_history(history: &Matrix, n: usize, lags: usize, h: usize) -> Result<()> {
    if history.ncols() != n || history.nrows() < lags {
        return Err(ForecastError::Shape(format!(
            "history is {}x{} for a {n}-variable VAR({lags})",
            history.nrows(),
            history.ncols()
        )));
    }
    if h == 0 {
        return Err(ForecastError::Shape("forecast horizon must be at least 1".into()));
    }
    Ok(())
}

pub fn simulate_tiv(draws: &TivDraws, history: &Matrix, h: usize, rng: &mut RngStream) -> Result<PredictiveSet> {
    check_history(history, draws.n, draws.lags, h)?;
    let paths: Vec<Option<Path>> =
        draws.a.iter().zip(&draws.omega).map(|(a, o)| tiv_path(a, o, history, draws.lags, h, rng)).collect();
    collect(paths.into_iter(), h)
}

/// Propagates coefficients, covariance rows and log volatilities forward as
/// random walks with each draw's innovation covariances.
pub fn simulate_tvp(chain: &TvpChain, history: &Matrix, h: usize, rng: &mut RngStream) -> Result<PredictiveSet> {
    check_history(history, chain.n, chain.lags, h)?;
    let paths: Vec<Option<Path>> = chain.draws.iter().map(|d| tvp_path(d, history, chain.lags, h, rng)).collect();
    collect(paths.into_iter(), h)
}

/// `h`-step predictive distributions from the last `P` rows of `history`.
pub fn simulate_predictive(fit: &VarFit, history: &Matrix, h: usize, rng: &mut RngStream) -> Result<PredictiveSet> {
    match fit {
        VarFit::Tiv(d) => simulate_tiv(d, history, h, rng),
        VarFit::Tvp(c) => simulate_tvp(c, history, h, rng),
    }
}

use super::{DataError, Panel, Quarter, Result, Role, Speed, TransformCode, VariableSpec};
use crate::numeric::{Matrix, RngStream, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Linear,
    /// `g(u) = 0.5 u + tanh(u)`, strictly increasing.
    MonotoneNonlinear,
}

impl DecoderKind {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            DecoderKind::Linear => u,
            DecoderKind::MonotoneNonlinear => 0.5 * u + u.tanh(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub t: usize,
    /// Width of the high-dimensional block.
    pub n: usize,
    pub c: usize,
    pub k: usize,
    /// Observable series appended after the panel block.
    pub m: usize,
    pub noise_std: f64,
    pub decoder: DecoderKind,
    /// Diagonal of the lower-triangular VAR(1) transition.
    pub rho: f64,
    /// Sub-diagonal of the transition.
    pub cross: f64,
    pub burn_in: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            t: 400,
            n: 36,
            c: 6,
            k: 3,
            m: 0,
            noise_std: 0.1,
            decoder: DecoderKind::MonotoneNonlinear,
            rho: 0.7,
            cross: 0.2,
            burn_in: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    /// `T×K` latent factors.
    pub true_factors: Matrix,
    /// `T×M` observables.
    pub true_observables: Matrix,
    /// `C×K` group-factor weights; rows `0..K` are anchors.
    pub true_b: Matrix,
    /// `N×K` per-variable weights.
    pub weights: Matrix,
    pub intercepts: Vector,
    /// Group index (0-based) of each panel_x column.
    pub var_group: Vec<usize>,
    pub transition: Matrix,
    pub noise_std: f64,
    pub decoder_kind: DecoderKind,
}

impl SyntheticTruth {
    /// Noise-free value of panel variable `i` given a factor row.
    pub fn signal(&self, i: usize, f: &[f64]) -> f64 {
        let c = self.var_group[i];
        let u: f64 = (0..f.len()).map(|k| self.weights[(i, k)] * f[k] * self.true_b[(c, k)]).sum();
        self.decoder_kind.apply(u) + self.intercepts[i]
    }
}

pub fn spectral_radius(a: &Matrix) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn signed_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    let v = rng.uniform_range(lo, hi);
    if rng.uniform() < 0.5 {
        -v
    } else {
        v
    }
}

/// Simulates an anchored grouped panel. Columns of group `c` are contiguous;
/// groups `0..K` are anchors of factors `0..K`.
pub fn generate_synthetic(cfg: &SyntheticConfig, rng: &mut RngStream) -> Result<(Panel, SyntheticTruth)> {
    let SyntheticConfig { t, n, c, k, m, .. } = *cfg;
    if k == 0 || k > c || c > n || t < 2 {
        return Err(DataError::InvalidSpec(format!("need 1 <= K <= C <= N and T >= 2 (K={k}, C={c}, N={n}, T={t})")));
    }
    if c > super::MAX_GROUPS as usize {
        return Err(DataError::InvalidSpec(format!("at most {} groups", super::MAX_GROUPS)));
    }
    if !(cfg.noise_std >= 0.0) {
        return Err(DataError::InvalidSpec("noise_std must be non-negative".into()));
    }
    let d = k + m;
    let transition = Matrix::from_fn(d, d, |i, j| {
        if i == j {
            cfg.rho
        } else if i == j + 1 {
            cfg.cross
        } else {
            0.0
        }
    });
    let radius = spectral_radius(&transition);
    if !(radius < 1.0) {
        return Err(DataError::UnstableSpec(radius));
    }
    let shock_sd = (1.0 - cfg.rho * cfg.rho).max(0.05).sqrt();
    let mut state = Vector::zeros(d);
    let mut path = Matrix::zeros(t, d);
    for step in 0..cfg.burn_in + t {
        let eps = Vector::from_fn(d, |_, _| shock_sd * rng.standard_normal());
        state = &transition * state + eps;
        if step >= cfg.burn_in {
            path.set_row(step - cfg.burn_in, &state.transpose());
        }
    }
    let true_factors = path.columns(0, k).into_owned();
    let true_observables = path.columns(k, m).into_owned();

    let mut true_b = Matrix::zeros(c, k);
    for g in 0..c {
        if g < k {
            true_b[(g, g)] = 1.0;
            continue;
        }
        for j in 0..k {
            if rng.uniform() < 0.6 {
                true_b[(g, j)] = rng.uniform_range(0.5, 1.0);
            }
        }
        if true_b.row(g).iter().all(|v| *v == 0.0) {
            let j = rng.index(k);
            true_b[(g, j)] = rng.uniform_range(0.5, 1.0);
        }
    }
    let var_group: Vec<usize> = (0..n).map(|i| i * c / n).collect();
    let weights = Matrix::from_fn(n, k, |_, _| signed_uniform(rng, 0.5, 1.5));
    let intercepts = Vector::from_fn(n, |_, _| 0.5 * rng.standard_normal());

    let truth = SyntheticTruth {
        true_factors,
        true_observables,
        true_b,
        weights,
        intercepts,
        var_group,
        transition,
        noise_std: cfg.noise_std,
        decoder_kind: cfg.decoder,
    };

    let mut values = Matrix::zeros(t, n + m);
    for r in 0..t {
        let f: Vec<f64> = truth.true_factors.row(r).iter().copied().collect();
        for i in 0..n {
            values[(r, i)] = truth.signal(i, &f) + cfg.noise_std * rng.standard_normal();
        }
        for j in 0..m {
            values[(r, n + j)] = truth.true_observables[(r, j)];
        }
    }
    let mut specs: Vec<VariableSpec> = (0..n)
        .map(|i| {
            let g = truth.var_group[i];
            VariableSpec {
                name: format!("x{i:03}"),
                group: Some(g as u8 + 1),
                tcode: TransformCode::Level,
                speed: if c > k && g == c - 1 { Speed::Fast } else { Speed::Slow },
                role: Role::PanelX,
            }
        })
        .collect();
    specs.extend((0..m).map(|j| VariableSpec {
        name: format!("y{j}"),
        group: None,
        tcode: TransformCode::Level,
        speed: Speed::Fast,
        role: Role::ObservableY,
    }));
    let start = Quarter::new(1960, 1).expect("valid quarter");
    let dates = (0..t).map(|r| start.offset(r as i64)).collect();
    let panel = Panel::from_transformed(values, specs, dates)?;
    Ok((panel, truth))
}

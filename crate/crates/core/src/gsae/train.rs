use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::grad_elbo;
use super::params::GsAeParams;
use super::{Activation, Architecture, GsAeError, Result, SslConfig};
use crate::data::{GroupLayout, Panel};
use crate::numeric::{Matrix, RngStream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 200, batch_size: 24, adam: AdamConfig::default(), seed: 0, shuffle: true }
    }
}

/// Epoch means of the batch losses (negated objective terms).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub total: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub regularization: Vec<f64>,
}

impl LossTrace {
    /// Epoch-mean objective, i.e. the negated total loss.
    pub fn elbo(&self) -> Vec<f64> {
        self.total.iter().map(|v| -v).collect()
    }
}

fn gather_rows(x: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), x.ncols(), |r, c| x[(rows[r], c)])
}

/// Mini-batch Adam ascent on the objective; after every step the inclusion
/// probabilities are recomputed from the new `B`. The final short batch is
/// kept and batches are reshuffled every epoch when `cfg.shuffle` is set.
pub fn train(
    mut params: GsAeParams,
    x: &Matrix,
    ssl: Option<&SslConfig>,
    cfg: &TrainConfig,
    rng: &mut RngStream,
) -> Result<(GsAeParams, LossTrace)> {
    let t = x.nrows();
    if cfg.batch_size == 0 || cfg.batch_size > t {
        return Err(GsAeError::InvalidConfig(format!("batch size {} with {t} observations", cfg.batch_size)));
    }
    if x.ncols() != params.arch.n {
        return Err(GsAeError::ShapeMismatch(format!(
            "data has {} columns, model expects {}",
            x.ncols(),
            params.arch.n
        )));
    }
    if let Some(s) = ssl {
        s.validate()?;
    }
    let mut state = AdamState::new(&params.theta);
    let mut trace = LossTrace::default();
    let mut order: Vec<usize> = (0..t).collect();
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            rng.shuffle(&mut order);
        }
        let (mut tot, mut rec, mut reg) = (0.0, 0.0, 0.0);
        let mut batches = 0usize;
        for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
            let xb = gather_rows(x, rows);
            let (grads, value) = grad_elbo(&params, ssl, &xb)?;
            if !value.total().is_finite() {
                return Err(GsAeError::DivergedLoss { epoch, batch });
            }
            adam_step(&mut state, &mut params.theta, &grads, &cfg.adam);
            if let Some(s) = ssl {
                params.refresh_p(s);
            }
            tot -= value.total();
            rec -= value.reconstruction;
            reg -= value.penalty;
            batches += 1;
        }
        let nb = batches as f64;
        trace.total.push(tot / nb);
        trace.reconstruction.push(rec / nb);
        trace.regularization.push(reg / nb);
        log::debug!("epoch {epoch}: loss {:.6}", tot / nb);
    }
    Ok((params, trace))
}

/// Builds and trains a grouped autoencoder on the panel_x block. `anchor_ids`
/// lists the group ids anchoring factors `0..K` in order.
pub fn fit_grouped(
    panel: &Panel,
    anchor_ids: &[u8],
    depth: usize,
    activation: Activation,
    ssl: &SslConfig,
    cfg: &TrainConfig,
) -> Result<(GsAeParams, LossTrace, GroupLayout)> {
    let layout = GroupLayout::new(&panel.x_groups(), anchor_ids)?;
    let x = panel.x_matrix();
    let arch = Architecture::evenly_spaced(x.ncols(), anchor_ids.len(), layout.n_groups(), depth, activation)?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let params = GsAeParams::init_grouped(arch, layout.var_group.clone(), layout.n_anchors, ssl, &mut rng)?;
    let (params, trace) = train(params, &x, Some(ssl), cfg, &mut rng)?;
    Ok((params, trace, layout))
}

pub fn fit_plain(
    panel: &Panel,
    k: usize,
    depth: usize,
    activation: Activation,
    cfg: &TrainConfig,
) -> Result<(GsAeParams, LossTrace)> {
    let x = panel.x_matrix();
    let arch = Architecture::evenly_spaced(x.ncols(), k, 1, depth, activation)?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let params = GsAeParams::init_plain(arch, &mut rng)?;
    train(params, &x, None, cfg, &mut rng)
}

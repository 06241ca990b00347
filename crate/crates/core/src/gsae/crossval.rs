use super::model::{elbo, reconstruct};
use super::params::GsAeParams;
use super::train::{train, TrainConfig};
use super::{Activation, Architecture, GsAeError, Result, SslConfig};
use crate::data::{GroupLayout, Panel};
use crate::numeric::{Matrix, RngStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldScheme {
    /// Time indices assigned to folds uniformly at random.
    Random,
    /// Contiguous blocks of quarters.
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub ks: Vec<usize>,
    pub depths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub lambda0s: Vec<f64>,
    pub lambda1s: Vec<f64>,
}

impl CvGrid {
    /// K in 2..=5, L in 2..=6, three activations; 3 × 4 SSL rates.
    pub fn standard() -> Self {
        Self {
            ks: (2..=5).collect(),
            depths: (2..=6).collect(),
            activations: vec![
                Activation::Tanh,
                Activation::LeakyRelu { slope: 0.01 },
                Activation::LeakyRelu { slope: 1e-16 },
            ],
            lambda0s: vec![100.0, 500.0, 1000.0],
            lambda1s: vec![1.0, 0.1, 0.01, 0.001],
        }
    }

    fn stage1(&self) -> Vec<(usize, usize, Activation)> {
        let mut out = Vec::new();
        for &act in &self.activations {
            for &k in &self.ks {
                for &l in &self.depths {
                    out.push((k, l, act));
                }
            }
        }
        out
    }

    fn stage2(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &l1 in &self.lambda1s {
            for &l0 in &self.lambda0s {
                out.push((l0, l1));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub scheme: FoldScheme,
    pub train: TrainConfig,
    /// Group ids anchoring factors in order; the GS stage uses the first K.
    pub anchors: Vec<u8>,
    #[serde(default)]
    pub hard_zero_anchors: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub k: usize,
    pub depth: usize,
    pub activation: Activation,
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    /// Mean over folds of the validation reconstruction MSE.
    pub val_mse: f64,
    /// Mean over folds of the validation objective.
    pub val_elbo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub stage1: Vec<CvCell>,
    pub stage2: Vec<CvCell>,
    pub best_stage1: usize,
    pub best_stage2: usize,
}

impl CvOutcome {
    pub fn best_architecture(&self) -> &CvCell {
        &self.stage1[self.best_stage1]
    }

    pub fn best_ssl(&self) -> &CvCell {
        &self.stage2[self.best_stage2]
    }
}

fn fold_of(t: usize, folds: usize, scheme: FoldScheme, seed: u64) -> Vec<usize> {
    match scheme {
        FoldScheme::Blocked => (0..t).map(|i| i * folds / t).collect(),
        FoldScheme::Random => {
            let mut order: Vec<usize> = (0..t).collect();
            RngStream::new(seed, u64::MAX).shuffle(&mut order);
            let mut fold = vec![0; t];
            for (pos, &i) in order.iter().enumerate() {
                fold[i] = pos % folds;
            }
            fold
        }
    }
}

fn rows(x: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), x.ncols(), |r, c| x[(idx[r], c)])
}

fn evaluate_cell<F>(x: &Matrix, fold: &[usize], cfg: &CvConfig, stream: u64, build: F) -> Result<(f64, f64)>
where
    F: Fn(&mut RngStream) -> Result<(GsAeParams, Option<SslConfig>)>,
{
    let mut mse = 0.0;
    let mut obj = 0.0;
    for f in 0..cfg.folds {
        let train_idx: Vec<usize> = (0..x.nrows()).filter(|&i| fold[i] != f).collect();
        let val_idx: Vec<usize> = (0..x.nrows()).filter(|&i| fold[i] == f).collect();
        let xt = rows(x, &train_idx);
        let xv = rows(x, &val_idx);
        let mut rng = RngStream::new(cfg.train.seed, stream).substream(stream.wrapping_mul(31).wrapping_add(f as u64));
        let (init, ssl) = build(&mut rng)?;
        let mut tc = cfg.train.clone();
        tc.batch_size = tc.batch_size.min(xt.nrows());
        let (params, _) = train(init, &xt, ssl.as_ref(), &tc, &mut rng)?;
        let recon = reconstruct(&params, &xv)?;
        mse += (&xv - recon).norm_squared() / (xv.nrows() * xv.ncols()) as f64;
        obj += elbo(&params, ssl.as_ref(), &xv)?;
    }
    Ok((mse / cfg.folds as f64, obj / cfg.folds as f64))
}

fn argmin(cells: &[CvCell]) -> usize {
    cells
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, c)| if c.val_mse < best.1 { (i, c.val_mse) } else { best })
        .0
}

/// Two-stage K-fold search: plain autoencoders choose `(K, L, activation)`,
/// then grouped autoencoders with that architecture choose `(λ0, λ1)`.
pub fn cross_validate(panel: &Panel, grid: &CvGrid, cfg: &CvConfig) -> Result<CvOutcome> {
    let s1 = grid.stage1();
    let s2 = grid.stage2();
    if s1.is_empty() || s2.is_empty() {
        return Err(GsAeError::EmptyGrid);
    }
    let x = panel.x_matrix();
    if cfg.folds < 2 || cfg.folds > x.nrows() {
        return Err(GsAeError::InvalidConfig(format!("{} folds for {} observations", cfg.folds, x.nrows())));
    }
    let fold = fold_of(x.nrows(), cfg.folds, cfg.scheme, cfg.train.seed);
    let n = x.ncols();

    let stage1: Vec<CvCell> = s1
        .par_iter()
        .enumerate()
        .map(|(idx, &(k, depth, activation))| {
            let arch = Architecture::evenly_spaced(n, k, 1, depth, activation)?;
            let (val_mse, val_elbo) = evaluate_cell(&x, &fold, cfg, 1 + idx as u64, |rng| {
                Ok((GsAeParams::init_plain(arch.clone(), rng)?, None))
            })?;
            Ok(CvCell { k, depth, activation, lambda0: None, lambda1: None, val_mse, val_elbo })
        })
        .collect::<Result<_>>()?;
    let best_stage1 = argmin(&stage1);
    let CvCell { k, depth, activation, .. } = stage1[best_stage1].clone();

    if cfg.anchors.len() < k {
        return Err(GsAeError::InvalidConfig(format!("{} anchor groups for K = {k}", cfg.anchors.len())));
    }
    let layout = GroupLayout::new(&panel.x_groups(), &cfg.anchors[..k])?;
    let arch = Architecture::evenly_spaced(n, k, layout.n_groups(), depth, activation)?;
    let stage2: Vec<CvCell> = s2
        .par_iter()
        .enumerate()
        .map(|(idx, &(lambda0, lambda1))| {
            let ssl = SslConfig { lambda0, lambda1, hard_zero_anchors: cfg.hard_zero_anchors };
            let (val_mse, val_elbo) = evaluate_cell(&x, &fold, cfg, 1_000_000 + idx as u64, |rng| {
                let p = GsAeParams::init_grouped(arch.clone(), layout.var_group.clone(), layout.n_anchors, &ssl, rng)?;
                Ok((p, Some(ssl)))
            })?;
            Ok(CvCell { k, depth, activation, lambda0: Some(lambda0), lambda1: Some(lambda1), val_mse, val_elbo })
        })
        .collect::<Result<_>>()?;
    let best_stage2 = argmin(&stage2);
    Ok(CvOutcome { stage1, stage2, best_stage1, best_stage2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticConfig};

    fn small_cfg() -> CvConfig {
        CvConfig {
            folds: 3,
            scheme: FoldScheme::Random,
            train: TrainConfig { epochs: 2, batch_size: 16, ..Default::default() },
            anchors: vec![1, 2, 3],
            hard_zero_anchors: false,
        }
    }

    #[test]
    fn single_cell_grid() {
        let (panel, _) =
            generate_synthetic(&SyntheticConfig { t: 60, ..Default::default() }, &mut RngStream::new(1, 0)).unwrap();
        let grid = CvGrid {
            ks: vec![3],
            depths: vec![2],
            activations: vec![Activation::Tanh],
            lambda0s: vec![1000.0],
            lambda1s: vec![1.0],
        };
        let out = cross_validate(&panel, &grid, &small_cfg()).unwrap();
        assert_eq!((out.stage1.len(), out.stage2.len()), (1, 1));
        assert_eq!(out.best_architecture().k, 3);
        assert_eq!(out.best_ssl().lambda0, Some(1000.0));
        assert!(out.stage1[0].val_mse.is_finite());
    }

    #[test]
    fn empty_grid() {
        let (panel, _) =
            generate_synthetic(&SyntheticConfig { t: 60, ..Default::default() }, &mut RngStream::new(1, 0)).unwrap();
        let grid = CvGrid { ks: vec![], ..CvGrid::standard() };
        assert!(matches!(cross_validate(&panel, &grid, &small_cfg()), Err(GsAeError::EmptyGrid)));
    }

    #[test]
    fn standard_grid_shape() {
        let g = CvGrid::standard();
        assert_eq!((g.stage1().len(), g.stage2().len()), (60, 12));
    }

    #[test]
    fn folds_partition_time() {
        for scheme in [FoldScheme::Random, FoldScheme::Blocked] {
            let f = fold_of(23, 5, scheme, 7);
            for k in 0..5 {
                let size = f.iter().filter(|v| **v == k).count();
                assert!((4..=5).contains(&size));
            }
        }
    }
}

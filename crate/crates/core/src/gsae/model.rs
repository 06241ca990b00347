use super::params::{Dense, GsAeParams, ParamSet};
use super::ssl::{ssl_penalty, ssl_penalty_grad};
use super::{Activation, GsAeError, Result, SslConfig};
use crate::numeric::Matrix;

/// `X Wᵀ + 1 bᵀ`.
fn affine(x: &Matrix, d: &Dense) -> Matrix {
    let mut z = x * d.w.transpose();
    for j in 0..z.ncols() {
        z.column_mut(j).add_scalar_mut(d.b[j]);
    }
    z
}

fn activate(z: &Matrix, act: Activation) -> Matrix {
    z.map(|v| act.apply(v))
}

struct GroupPass {
    group: usize,
    members: Vec<usize>,
    /// Input of each shared layer; the first is `F ⊙ β_c`.
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    /// Output of the last shared layer (head input).
    top: Matrix,
}

struct Pass {
    enc_inputs: Vec<Matrix>,
    enc_pre: Vec<Matrix>,
    factors: Matrix,
    groups: Vec<GroupPass>,
    recon: Matrix,
}

fn check_width(x: &Matrix, width: usize, what: &str) -> Result<()> {
    if x.ncols() != width {
        return Err(GsAeError::ShapeMismatch(format!("{what} has {} columns, expected {width}", x.ncols())));
    }
    if x.nrows() == 0 {
        return Err(GsAeError::ShapeMismatch(format!("{what} is empty")));
    }
    Ok(())
}

fn encode_pass(params: &GsAeParams, x: &Matrix) -> (Vec<Matrix>, Vec<Matrix>, Matrix) {
    let act = params.arch.activation;
    let layers = &params.theta.encoder;
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut a = x.clone();
    for (l, d) in layers.iter().enumerate() {
        let z = affine(&a, d);
        let next = if l + 1 == layers.len() { z.clone() } else { activate(&z, act) };
        inputs.push(a);
        pre.push(z);
        a = next;
    }
    (inputs, pre, a)
}

fn decode_pass(params: &GsAeParams, f: &Matrix) -> (Vec<GroupPass>, Matrix) {
    let act = params.arch.activation;
    let n = params.arch.n;
    let mut recon = Matrix::zeros(f.nrows(), n);
    let mut groups = Vec::new();
    for (c, members) in params.group_members().into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut u = f.clone();
        for k in 0..u.ncols() {
            let beta = params.theta.b[(c, k)];
            u.column_mut(k).scale_mut(beta);
        }
        let mut inputs = Vec::new();
        let mut pre = Vec::new();
        let mut a = u;
        for d in &params.theta.shared {
            let z = affine(&a, d);
            let next = activate(&z, act);
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        for &i in &members {
            let w = params.theta.head_w.row(i);
            let col = &a * w.transpose();
            let bias = params.theta.head_b[i];
            recon.column_mut(i).copy_from(&col.add_scalar(bias));
        }
        groups.push(GroupPass { group: c, members, inputs, pre, top: a });
    }
    (groups, recon)
}

fn forward(params: &GsAeParams, x: &Matrix) -> Result<Pass> {
    check_width(x, params.arch.n, "batch")?;
    let (enc_inputs, enc_pre, factors) = encode_pass(params, x);
    let (groups, recon) = decode_pass(params, &factors);
    Ok(Pass { enc_inputs, enc_pre, factors, groups, recon })
}

/// Factors for every row of `x`.
pub fn encode(params: &GsAeParams, x: &Matrix) -> Result<Matrix> {
    check_width(x, params.arch.n, "batch")?;
    Ok(encode_pass(params, x).2)
}

/// Reconstruction `B×N` from factors `B×K`.
pub fn decode(params: &GsAeParams, factors: &Matrix) -> Result<Matrix> {
    check_width(factors, params.arch.k, "factors")?;
    Ok(decode_pass(params, factors).1)
}

pub fn reconstruct(params: &GsAeParams, x: &Matrix) -> Result<Matrix> {
    Ok(forward(params, x)?.recon)
}

/// Components of the objective for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboParts {
    /// `-(1/2T') Σ_t MSE_t`.
    pub reconstruction: f64,
    /// SSL term scaled by `1/(T' N)`.
    pub penalty: f64,
}

impl ElboParts {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.penalty
    }
}

fn parts(params: &GsAeParams, ssl: Option<&SslConfig>, x: &Matrix, recon: &Matrix) -> ElboParts {
    let (bt, n) = x.shape();
    let sse: f64 = x.iter().zip(recon.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let reconstruction = -sse / (2.0 * bt as f64 * n as f64);
    let penalty = match ssl {
        Some(cfg) if !params.b_frozen => ssl_penalty(&params.theta.b, &params.p, cfg) / (bt as f64 * n as f64),
        _ => 0.0,
    };
    ElboParts { reconstruction, penalty }
}

/// Objective on a batch with `P` read from `params`. `ssl = None` drops the
/// penalty (plain autoencoder).
pub fn elbo_parts(params: &GsAeParams, ssl: Option<&SslConfig>, x: &Matrix) -> Result<ElboParts> {
    let pass = forward(params, x)?;
    Ok(parts(params, ssl, x, &pass.recon))
}

pub fn elbo(params: &GsAeParams, ssl: Option<&SslConfig>, x: &Matrix) -> Result<f64> {
    elbo_parts(params, ssl, x).map(|p| p.total())
}

/// Backpropagates `d_top` through the dense stack, accumulating into `grads`.
/// Returns the gradient with respect to the stack input.
fn backprop_stack(
    layers: &[Dense],
    grads: &mut [Dense],
    inputs: &[Matrix],
    pre: &[Matrix],
    mut d_out: Matrix,
    act: Activation,
    identity_last: bool,
) -> Matrix {
    for l in (0..layers.len()).rev() {
        let dz = if identity_last && l + 1 == layers.len() {
            d_out
        } else {
            d_out.zip_map(&pre[l], |g, z| g * act.derivative(z))
        };
        grads[l].w += dz.transpose() * &inputs[l];
        for j in 0..dz.ncols() {
            grads[l].b[j] += dz.column(j).sum();
        }
        d_out = &dz * &layers[l].w;
    }
    d_out
}

/// Exact gradient of [`elbo`] with `P` held constant, together with the value.
pub fn grad_elbo(params: &GsAeParams, ssl: Option<&SslConfig>, x: &Matrix) -> Result<(ParamSet, ElboParts)> {
    let pass = forward(params, x)?;
    let value = parts(params, ssl, x, &pass.recon);
    let (bt, n) = x.shape();
    let scale = 1.0 / (bt as f64 * n as f64);
    let act = params.arch.activation;
    let theta = &params.theta;
    let mut g = ParamSet::zeros_like(theta);
    let resid = (x - &pass.recon) * scale;
    let mut d_factors = Matrix::zeros(bt, params.arch.k);

    for gp in &pass.groups {
        let c = gp.group;
        let mut d_top = Matrix::zeros(bt, gp.top.ncols());
        for &i in &gp.members {
            let gi = resid.column(i);
            let gw = gp.top.transpose() * gi;
            for j in 0..gw.len() {
                g.head_w[(i, j)] += gw[j];
            }
            g.head_b[i] += gi.sum();
            d_top += gi * theta.head_w.row(i);
        }
        let d_u = backprop_stack(&theta.shared, &mut g.shared, &gp.inputs, &gp.pre, d_top, act, false);
        for k in 0..params.arch.k {
            let beta = theta.b[(c, k)];
            let du = d_u.column(k);
            g.b[(c, k)] += du.dot(&pass.factors.column(k));
            d_factors.column_mut(k).axpy(beta, &du, 1.0);
        }
    }
    backprop_stack(&theta.encoder, &mut g.encoder, &pass.enc_inputs, &pass.enc_pre, d_factors, act, true);

    if params.b_frozen {
        g.b.fill(0.0);
    } else {
        if let Some(cfg) = ssl {
            for c in 0..params.arch.c {
                for k in 0..params.arch.k {
                    g.b[(c, k)] += scale * ssl_penalty_grad(theta.b[(c, k)], params.p[(c, k)], cfg);
                }
            }
        }
        if params.hard_zero {
            for c in 0..params.arch.c {
                for k in 0..params.arch.k {
                    if params.is_masked(c, k) {
                        g.b[(c, k)] = 0.0;
                    }
                }
            }
        }
    }
    Ok((g, value))
}

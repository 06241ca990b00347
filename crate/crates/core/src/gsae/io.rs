use super::params::{Dense, GsAeParams, ParamSet};
use super::{Architecture, GsAeError, LossTrace, Result};
use crate::artifact::{Array, Artifact};
use serde_json::json;
use std::io::Write;

impl GsAeParams {
    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(json!({
            "kind": "gsae_params",
            "arch": self.arch,
            "var_group": self.var_group,
            "n_anchors": self.n_anchors,
            "hard_zero": self.hard_zero,
            "b_frozen": self.b_frozen,
        }));
        let t = &self.theta;
        for (l, d) in t.encoder.iter().enumerate() {
            a.push(Array::from_matrix(format!("encoder.{l}.w"), &d.w));
            a.push(Array::from_vector(format!("encoder.{l}.b"), &d.b));
        }
        for (l, d) in t.shared.iter().enumerate() {
            a.push(Array::from_matrix(format!("shared.{l}.w"), &d.w));
            a.push(Array::from_vector(format!("shared.{l}.b"), &d.b));
        }
        a.push(Array::from_matrix("head.w", &t.head_w));
        a.push(Array::from_vector("head.b", &t.head_b));
        a.push(Array::from_matrix("ssl.b", &t.b));
        a.push(Array::from_matrix("ssl.p", &self.p));
        a
    }

    /// Rebuilds parameters and checks every tensor against the stored
    /// architecture.
    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        let kind: String = a.meta_field("kind")?;
        if kind != "gsae_params" {
            return Err(GsAeError::InvalidConfig(format!("artifact holds '{kind}', not autoencoder parameters")));
        }
        let arch: Architecture = a.meta_field("arch")?;
        arch.validate()?;
        let var_group: Vec<usize> = a.meta_field("var_group")?;
        let n_anchors: usize = a.meta_field("n_anchors")?;
        let dense = |prefix: &str, l: usize, input: usize, output: usize| -> Result<Dense> {
            let w = a.get(&format!("{prefix}.{l}.w"))?;
            w.expect_dims(&[output, input])?;
            let b = a.get(&format!("{prefix}.{l}.b"))?;
            b.expect_dims(&[output])?;
            Ok(Dense { w: w.to_matrix()?, b: b.to_vector()? })
        };
        let mut encoder = Vec::new();
        let mut input = arch.n;
        for (l, &d) in arch.encoder_dims.iter().enumerate() {
            encoder.push(dense("encoder", l, input, d)?);
            input = d;
        }
        let mut shared = Vec::new();
        let mut input = arch.k;
        for (l, &d) in arch.decoder_dims.iter().enumerate() {
            shared.push(dense("shared", l, input, d)?);
            input = d;
        }
        let fetch = |name: &str, dims: &[usize]| -> Result<&Array> {
            let arr = a.get(name)?;
            arr.expect_dims(dims)?;
            Ok(arr)
        };
        let head_w = fetch("head.w", &[arch.n, arch.head_input()])?.to_matrix()?;
        let head_b = fetch("head.b", &[arch.n])?.to_vector()?;
        let b = fetch("ssl.b", &[arch.c, arch.k])?.to_matrix()?;
        let p = fetch("ssl.p", &[arch.c, arch.k])?.to_matrix()?;
        if var_group.len() != arch.n || var_group.iter().any(|g| *g >= arch.c) || n_anchors > arch.k.min(arch.c) {
            return Err(GsAeError::InvalidConfig("group layout does not match the architecture".into()));
        }
        Ok(Self {
            theta: ParamSet { encoder, shared, head_w, head_b, b },
            p,
            var_group,
            n_anchors,
            hard_zero: a.meta_field("hard_zero")?,
            b_frozen: a.meta_field("b_frozen")?,
            arch,
        })
    }
}

fn csv_err(e: impl std::fmt::Display) -> GsAeError {
    GsAeError::InvalidConfig(format!("csv output failed: {e}"))
}

/// Long-format `B` matrix for a heat map: `group,factor,beta,inclusion`,
/// one row per cell. `groups` labels the rows of `B`, `factors` its columns.
pub fn write_b_heatmap_csv<W: Write>(params: &GsAeParams, groups: &[String], factors: &[String], out: W) -> Result<()> {
    let b = &params.theta.b;
    if groups.len() != b.nrows() || factors.len() != b.ncols() {
        return Err(GsAeError::ShapeMismatch(format!(
            "{} group and {} factor labels for a {}x{} B",
            groups.len(),
            factors.len(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "factor", "beta", "inclusion"]).map_err(csv_err)?;
    for (c, g) in groups.iter().enumerate() {
        for (k, f) in factors.iter().enumerate() {
            w.write_record([g.as_str(), f, &format!("{:e}", b[(c, k)]), &format!("{:e}", params.p[(c, k)])])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

/// `epoch,total,reconstruction,regularization`.
pub fn write_loss_trace_csv<W: Write>(trace: &LossTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "total", "reconstruction", "regularization"]).map_err(csv_err)?;
    for e in 0..trace.total.len() {
        w.write_record([
            (e + 1).to_string(),
            format!("{:e}", trace.total[e]),
            format!("{:e}", trace.reconstruction[e]),
            format!("{:e}", trace.regularization[e]),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

use super::{FactorError, FactorSet, LoadingDraws, Method, Result};
use crate::artifact::{Array, Artifact};
use crate::data::{Panel, Quarter};
use crate::numeric::stats::pearson;
use serde_json::json;
use std::io::Write;

fn csv_err(e: impl std::fmt::Display) -> FactorError {
    FactorError::Csv(e.to_string())
}

fn expect(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(FactorError::ShapeMismatch(what.to_string()))
    }
}

impl FactorSet {
    /// `date` column, then the latent factors and the observables.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once("date".to_string()).chain(self.variable_names())).map_err(csv_err)?;
        let all = self.combined();
        for (r, d) in self.dates.iter().enumerate() {
            let row = all.row(r).iter().map(|v| format!("{v:e}")).collect::<Vec<_>>();
            w.write_record(std::iter::once(d.to_string()).chain(row)).map_err(csv_err)?;
        }
        w.flush().map_err(csv_err)
    }

    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(json!({
            "kind": "factor_set",
            "method": self.method,
            "latent_names": self.latent_names,
            "observable_names": self.observable_names,
            "anchor_names": self.anchor_names,
            "dates": self.dates,
        }));
        a.push(Array::from_matrix("latent", &self.latent));
        a.push(Array::from_matrix("observable", &self.observable));
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        let kind: String = a.meta_field("kind")?;
        expect(kind == "factor_set", "artifact does not hold a factor set")?;
        let method: Method = a.meta_field("method")?;
        let dates: Vec<Quarter> = a.meta_field("dates")?;
        let f = FactorSet {
            latent: a.matrix("latent")?,
            observable: a.matrix("observable")?,
            method,
            latent_names: a.meta_field("latent_names")?,
            observable_names: a.meta_field("observable_names")?,
            anchor_names: a.meta_field("anchor_names")?,
            dates,
        };
        f.check()?;
        Ok(f)
    }
}

impl LoadingDraws {
    pub fn to_artifact(&self) -> Artifact {
        let (n, q) = self.lambda.first().map(|l| l.shape()).unwrap_or((0, 0));
        let mut a = Artifact::new(json!({ "kind": "loading_draws", "n": n, "q": q }));
        a.push(Array::from_matrices("lambda", &self.lambda, n, q));
        let s: Vec<f64> = self.sigma2.iter().flat_map(|v| v.iter().copied()).collect();
        a.push(Array::new("sigma2", vec![self.sigma2.len(), n], s));
        a
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        let kind: String = a.meta_field("kind")?;
        expect(kind == "loading_draws", "artifact does not hold loading draws")?;
        let n: usize = a.meta_field("n")?;
        let q: usize = a.meta_field("q")?;
        let lambda = a.get("lambda")?.to_matrices()?;
        let s = a.get("sigma2")?;
        expect(s.dims == [lambda.len(), n], "sigma2 shape")?;
        expect(lambda.iter().all(|l| l.shape() == (n, q)), "loading shape")?;
        let sigma2 =
            s.data.chunks(n.max(1)).take(lambda.len()).map(crate::numeric::Vector::from_column_slice).collect();
        Ok(Self { lambda, sigma2 })
    }
}

/// One row of a factor's correlation table.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlate {
    pub variable: String,
    pub group: Option<u8>,
    pub corr: f64,
}

/// Panel variables with the `top` largest absolute correlations with
/// `factor`, strongest first; ties keep manifest order.
pub fn top_correlations(panel: &Panel, factor: &[f64], top: usize) -> Result<Vec<Correlate>> {
    expect(factor.len() == panel.t(), "factor length differs from the panel")?;
    let mut rows: Vec<Correlate> = panel
        .x_indices()
        .into_iter()
        .map(|j| {
            let col: Vec<f64> = panel.values.column(j).iter().copied().collect();
            Correlate {
                variable: panel.specs[j].name.clone(),
                group: panel.specs[j].group,
                corr: pearson(factor, &col),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.corr.abs().total_cmp(&a.corr.abs()));
    rows.truncate(top);
    Ok(rows)
}

/// CSV `factor,rank,variable,group,corr` for every latent factor.
pub fn write_correlation_csv<W: Write>(panel: &Panel, factors: &FactorSet, top: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["factor", "rank", "variable", "group", "corr"]).map_err(csv_err)?;
    for (k, name) in factors.latent_names.iter().enumerate() {
        let f: Vec<f64> = factors.latent.column(k).iter().copied().collect();
        for (rank, c) in top_correlations(panel, &f, top)?.into_iter().enumerate() {
            let group = c.group.map(|g| g.to_string()).unwrap_or_default();
            w.write_record([name.clone(), (rank + 1).to_string(), c.variable, group, format!("{:e}", c.corr)])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

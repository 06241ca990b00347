use super::window::{ForecastRecord, ForecastRun};
use super::{csv_err, ForecastError, Result};
use crate::data::Quarter;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRule {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub variable: String,
    pub horizon: usize,
    pub n_origins: usize,
    pub mae: f64,
    pub alpl: f64,
    /// Model MAE divided by the benchmark's.
    pub rel_mae: Option<f64>,
    /// Model ALPL minus the benchmark's.
    pub rel_alpl: Option<f64>,
}

/// ALPL of the joint predictive density of all targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRow {
    pub horizon: usize,
    pub alpl: f64,
    pub rel_alpl: Option<f64>,
}

/// Running sum over origins of the log predictive density, minus the
/// benchmark's when there is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    pub variable: String,
    pub horizon: usize,
    pub origin_date: Quarter,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub model: String,
    pub benchmark: Option<String>,
    pub rows: Vec<MetricRow>,
    pub joint: Vec<JointRow>,
    pub cumulative: Vec<CumulativePoint>,
}

type Cell<'a> = Vec<&'a ForecastRecord>;

/// Records grouped by `(target, horizon)`, each in origin order.
fn cells(run: &ForecastRun) -> BTreeMap<(usize, usize), Cell<'_>> {
    let mut out: BTreeMap<(usize, usize), Cell<'_>> = BTreeMap::new();
    for r in &run.records {
        out.entry((r.target, r.horizon)).or_default().push(r);
    }
    for v in out.values_mut() {
        v.sort_by_key(|r| r.origin);
    }
    out
}

fn point(r: &ForecastRecord, rule: PointRule) -> f64 {
    match rule {
        PointRule::Mean => r.point,
        PointRule::Median => r.median,
    }
}

fn mae(c: &Cell<'_>, rule: PointRule) -> f64 {
    c.iter().map(|r| (point(r, rule) - r.realized).abs()).sum::<f64>() / c.len() as f64
}

fn alpl(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn same_origins(a: &Cell<'_>, b: &Cell<'_>) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.origin == y.origin)
}

/// MAE and ALPL per observable and horizon, relative to `benchmark` when
/// given (MAE as a ratio, ALPL as a difference), plus the cumulative log
/// score series.
pub fn compute_metrics(run: &ForecastRun, benchmark: Option<&ForecastRun>, rule: PointRule) -> Result<MetricTable> {
    let model_cells = cells(run);
    let bench_cells = benchmark.map(cells);
    if let (Some(b), Some(bc)) = (benchmark, &bench_cells) {
        if b.targets != run.targets {
            return Err(ForecastError::OriginMismatch(format!("targets {:?} vs {:?}", run.targets, b.targets)));
        }
        if bc.keys().ne(model_cells.keys()) {
            return Err(ForecastError::OriginMismatch("runs cover different variable/horizon cells".into()));
        }
    }
    let mut rows = Vec::new();
    let mut cumulative = Vec::new();
    for (&(target, horizon), cell) in &model_cells {
        let bench = match &bench_cells {
            Some(bc) => {
                let b = &bc[&(target, horizon)];
                if !same_origins(cell, b) {
                    return Err(ForecastError::OriginMismatch(format!("{} at horizon {horizon}", run.targets[target])));
                }
                Some(b)
            }
            None => None,
        };
        let m = mae(cell, rule);
        let a = alpl(cell.iter().map(|r| r.log_density));
        rows.push(MetricRow {
            variable: run.targets[target].clone(),
            horizon,
            n_origins: cell.len(),
            mae: m,
            alpl: a,
            rel_mae: bench.map(|b| m / mae(b, rule)),
            rel_alpl: bench.map(|b| a - alpl(b.iter().map(|r| r.log_density))),
        });
        let mut acc = 0.0;
        for (i, r) in cell.iter().enumerate() {
            acc += r.log_density - bench.map_or(0.0, |b| b[i].log_density);
            cumulative.push(CumulativePoint {
                variable: run.targets[target].clone(),
                horizon,
                origin_date: r.origin_date,
                value: acc,
            });
        }
    }
    let joint_scores = |cells: &BTreeMap<(usize, usize), Cell<'_>>, h: usize| {
        cells.get(&(0, h)).map(|c| alpl(c.iter().map(|r| r.joint)))
    };
    let horizons: Vec<usize> = {
        let mut h: Vec<usize> = model_cells.keys().map(|k| k.1).collect();
        h.sort_unstable();
        h.dedup();
        h
    };
    let joint = horizons
        .into_iter()
        .filter_map(|h| {
            let a = joint_scores(&model_cells, h)?;
            let rel = bench_cells.as_ref().and_then(|bc| joint_scores(bc, h)).map(|b| a - b);
            Some(JointRow { horizon: h, alpl: a, rel_alpl: rel })
        })
        .collect();
    Ok(MetricTable { model: run.model.clone(), benchmark: benchmark.map(|b| b.model.clone()), rows, joint, cumulative })
}

impl MetricTable {
    /// Nested `horizon → variable → metrics`, one block per horizon.
    pub fn to_json(&self) -> Value {
        let mut by_h: BTreeMap<String, BTreeMap<String, Value>> = BTreeMap::new();
        for r in &self.rows {
            by_h.entry(format!("h{}", r.horizon)).or_default().insert(
                r.variable.clone(),
                json!({ "mae": r.mae, "alpl": r.alpl, "rel_mae": r.rel_mae, "rel_alpl": r.rel_alpl, "n_origins": r.n_origins }),
            );
        }
        for j in &self.joint {
            by_h.entry(format!("h{}", j.horizon))
                .or_default()
                .insert("joint".into(), json!({ "alpl": j.alpl, "rel_alpl": j.rel_alpl }));
        }
        json!({ "model": self.model, "benchmark": self.benchmark, "horizons": by_h })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// `model,variable,horizon,metric,value` with one row per metric.
pub fn write_metrics_csv<W: Write>(table: &MetricTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "variable", "horizon", "metric", "value"]).map_err(csv_err)?;
    for r in &table.rows {
        let h = r.horizon.to_string();
        let metrics = [
            ("mae", format!("{:e}", r.mae)),
            ("alpl", format!("{:e}", r.alpl)),
            ("rel_mae", opt(r.rel_mae)),
            ("rel_alpl", opt(r.rel_alpl)),
        ];
        for (name, v) in metrics {
            w.write_record([table.model.as_str(), &r.variable, &h, name, &v]).map_err(csv_err)?;
        }
    }
    for j in &table.joint {
        let h = j.horizon.to_string();
        w.write_record([table.model.as_str(), "joint", &h, "alpl", &format!("{:e}", j.alpl)]).map_err(csv_err)?;
        w.write_record([table.model.as_str(), "joint", &h, "rel_alpl", &opt(j.rel_alpl)]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

/// `model,variable,horizon,origin,value` for the cumulative log score.
pub fn write_cumulative_csv<W: Write>(table: &MetricTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "variable", "horizon", "origin", "value"]).map_err(csv_err)?;
    for c in &table.cumulative {
        w.write_record([
            table.model.as_str(),
            &c.variable,
            &c.horizon.to_string(),
            &c.origin_date.to_string(),
            &format!("{:e}", c.value),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

use super::predictive::simulate_predictive;
use super::{csv_err, ForecastError, Result};
use crate::artifact::{Array, Artifact};
use crate::data::{Panel, Quarter};
use crate::numeric::RngStream;
use crate::pipeline::{extract_factor_set, fit_var, FactorSpec, VarConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub factor: FactorSpec,
    pub var: VarConfig,
    /// Quarters in the first estimation window.
    pub initial_window: usize,
    #[serde(default = "four")]
    pub max_horizon: usize,
}

fn four() -> usize {
    4
}

/// One forecast of one observable at one origin and horizon, in the
/// standardized units of the origin's window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    /// Row index of the last in-window quarter.
    pub origin: usize,
    pub origin_date: Quarter,
    pub horizon: usize,
    /// Index into the run's target list.
    pub target: usize,
    /// Predictive mean.
    pub point: f64,
    pub median: f64,
    pub realized: f64,
    /// Log of the marginal predictive density at the realized value.
    pub log_density: f64,
    /// Joint log predictive density of all targets at this origin and horizon.
    pub joint: f64,
    pub n_draws: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginFailure {
    pub origin: usize,
    pub origin_date: Quarter,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub model: String,
    pub targets: Vec<String>,
    pub max_horizon: usize,
    /// Ordered by origin, then horizon, then target.
    pub records: Vec<ForecastRecord>,
    pub failures: Vec<OriginFailure>,
}

const RECORD_COLUMNS: usize = 10;

impl ForecastRun {
    pub fn origins(&self) -> Vec<usize> {
        let mut o: Vec<usize> = self.records.iter().map(|r| r.origin).collect();
        o.dedup();
        o
    }

    pub fn to_artifact(&self) -> Artifact {
        let dates: BTreeMap<usize, Quarter> = self.records.iter().map(|r| (r.origin, r.origin_date)).collect();
        let mut a = Artifact::new(json!({
            "kind": "forecast_run",
            "model": self.model,
            "targets": self.targets,
            "max_horizon": self.max_horizon,
            "origin_dates": dates.into_iter().collect::<Vec<_>>(),
            "failures": self.failures,
        }));
        let mut data = Vec::with_capacity(self.records.len() * RECORD_COLUMNS);
        for r in &self.records {
            data.extend_from_slice(&[
                r.origin as f64,
                r.horizon as f64,
                r.target as f64,
                r.point,
                r.median,
                r.realized,
                r.log_density,
                r.joint,
                r.n_draws as f64,
                r.discarded as f64,
            ]);
        }
        a.push(Array::new("records", vec![self.records.len(), RECORD_COLUMNS], data));
        a
    }

    pub fn from_artifact(art: &Artifact) -> Result<Self> {
        let kind: String = art.meta_field("kind")?;
        if kind != "forecast_run" {
            return Err(ForecastError::Config(format!("artifact kind '{kind}' is not a forecast run")));
        }
        let dates: BTreeMap<usize, Quarter> =
            art.meta_field::<Vec<(usize, Quarter)>>("origin_dates")?.into_iter().collect();
        let targets: Vec<String> = art.meta_field("targets")?;
        let arr = art.get("records")?;
        if arr.dims.len() != 2 || arr.dims[1] != RECORD_COLUMNS {
            return Err(ForecastError::Shape(format!("records array has dims {:?}", arr.dims)));
        }
        let records = arr
            .data
            .chunks_exact(RECORD_COLUMNS)
            .map(|c| {
                let origin = c[0] as usize;
                let origin_date =
                    *dates.get(&origin).ok_or_else(|| ForecastError::Shape(format!("origin {origin} has no date")))?;
                if c[2] as usize >= targets.len() {
                    return Err(ForecastError::Shape(format!("target index {} out of range", c[2])));
                }
                Ok(ForecastRecord {
                    origin,
                    origin_date,
                    horizon: c[1] as usize,
                    target: c[2] as usize,
                    point: c[3],
                    median: c[4],
                    realized: c[5],
                    log_density: c[6],
                    joint: c[7],
                    n_draws: c[8] as usize,
                    discarded: c[9] as usize,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: art.meta_field("model")?,
            targets,
            max_horizon: art.meta_field("max_horizon")?,
            records,
            failures: art.meta_field("failures")?,
        })
    }
}

fn forecast_origin(panel: &Panel, cfg: &ForecastConfig, origin: usize, rng: &RngStream) -> Result<Vec<ForecastRecord>> {
    let window = panel.window(origin + 1)?;
    let (factors, _) = extract_factor_set(&window, &cfg.factor)?;
    let w = factors.combined();
    let fit = fit_var(&w, &cfg.var, &mut rng.substream(2 * origin as u64))?;
    let lags = fit.lags();
    let history = w.rows(w.nrows() - lags, lags).into_owned();
    let h_max = cfg.max_horizon.min(panel.t() - 1 - origin);
    let pred = simulate_predictive(&fit, &history, h_max, &mut rng.substream(2 * origin as u64 + 1))?;
    let k = factors.k();
    let y_cols = panel.y_indices();
    let mut out = Vec::with_capacity(h_max * y_cols.len());
    for p in &pred.horizons {
        let realized: Vec<f64> = y_cols
            .iter()
            .map(|&c| (panel.transformed[(origin + p.horizon, c)] - window.means[c]) / window.stds[c])
            .collect();
        let idx: Vec<usize> = (k..k + y_cols.len()).collect();
        let joint = p.joint_log_density(&idx, &realized)?;
        for (j, &value) in realized.iter().enumerate() {
            out.push(ForecastRecord {
                origin,
                origin_date: panel.dates[origin],
                horizon: p.horizon,
                target: j,
                point: p.mean(k + j),
                median: p.median(k + j),
                realized: value,
                log_density: p.log_density(k + j, value),
                joint,
                n_draws: p.len(),
                discarded: pred.discarded,
            });
        }
    }
    Ok(out)
}

/// Refits factor extraction and the VAR on every expanding window
/// `0..=origin` and forecasts the observables `1..=max_horizon` quarters
/// ahead where realized data exist. Origin `o` uses streams `2o` (estimation)
/// and `2o + 1` (simulation) of `rng`, so results do not depend on the order
/// in which origins complete. A failing origin is recorded and skipped.
pub fn run_expanding_window(panel: &Panel, cfg: &ForecastConfig, rng: &RngStream) -> Result<ForecastRun> {
    let t = panel.t();
    if cfg.initial_window < 2 || cfg.initial_window >= t {
        return Err(ForecastError::Config(format!(
            "initial window of {} quarters in a panel of {t}",
            cfg.initial_window
        )));
    }
    if cfg.max_horizon == 0 {
        return Err(ForecastError::Config("max_horizon must be at least 1".into()));
    }
    if panel.y_indices().is_empty() {
        return Err(ForecastError::Config("panel has no observables to forecast".into()));
    }
    let origins: Vec<usize> = (cfg.initial_window - 1..t - 1).collect();
    let results: Vec<(usize, Result<Vec<ForecastRecord>>)> =
        origins.par_iter().map(|&o| (o, forecast_origin(panel, cfg, o, rng))).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (o, r) in results {
        match r {
            Ok(mut recs) => records.append(&mut recs),
            Err(e) => {
                log::warn!("origin {} failed: {e}", panel.dates[o]);
                failures.push(OriginFailure { origin: o, origin_date: panel.dates[o], message: e.to_string() });
            }
        }
    }
    Ok(ForecastRun {
        model: format!("{}-{}", cfg.var.spec, cfg.factor.method.as_str()),
        targets: panel.y_names(),
        max_horizon: cfg.max_horizon,
        records,
        failures,
    })
}

/// Tidy long CSV: `model,variable,horizon,origin,quantity,value`.
pub fn write_records_csv<W: Write>(run: &ForecastRun, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "variable", "horizon", "origin", "quantity", "value"]).map_err(csv_err)?;
    for r in &run.records {
        let quantities =
            [("point", r.point), ("median", r.median), ("realized", r.realized), ("log_density", r.log_density)];
        for (name, v) in quantities {
            w.write_record([
                run.model.as_str(),
                run.targets[r.target].as_str(),
                &r.horizon.to_string(),
                &r.origin_date.to_string(),
                name,
                &format!("{v:e}"),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

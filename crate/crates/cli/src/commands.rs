use crate::config::{Loaded, Stage};
use crate::error::{CliError, Result};
use crate::store::Store;
use gsfavar::artifact::Artifact;
use gsfavar::bvar::write_diagnostics_csv;
use gsfavar::data::{
    build_panel, generate_synthetic, parse_manifest, parse_raw_csv, GroupInfo, GroupLayout, LoadOptions, Manifest,
    Panel, Quarter, SyntheticConfig,
};
use gsfavar::factors::{gibbs_lambda_sigma, write_correlation_csv, FactorSet, LoadingDraws, Method};
use gsfavar::forecast::{
    compute_metrics, run_expanding_window, write_cumulative_csv, write_metrics_csv, write_records_csv, ForecastConfig,
    ForecastRun,
};
use gsfavar::gsae::{
    cross_validate, write_b_heatmap_csv, write_loss_trace_csv, CvCell, CvConfig, GsAeParams, TrainConfig,
};
use gsfavar::irf::{irf_over_time, irf_panel, irf_panel_fixed, summarize, write_irf_csv, IrfResult, ShockSpec};
use gsfavar::numeric::{Matrix, RngStream};
use gsfavar::pipeline::{apply_extractor, fit_extractor, fit_var, Extractor, FactorSpec, VarFit, VarSpec};
use serde_json::json;
use std::io::Write;

pub const PANEL: &str = "panel.gsa";
pub const EXTRACTOR: &str = "extractor.gsa";
pub const FACTORS: &str = "factors.gsa";
pub const LOADINGS: &str = "loadings.gsa";
pub const VAR_DRAWS: &str = "var_draws.gsa";

/// Stream ids under the run seed, one per consumer.
const STREAM_DATA: u64 = 0;
const STREAM_LOADINGS: u64 = 3;
const STREAM_VAR: u64 = 4;
const STREAM_FORECAST: u64 = 5;
const STREAM_BENCHMARK: u64 = 6;

fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_date(s: &str) -> Result<Quarter> {
    s.parse().map_err(|e: gsfavar::data::ParseQuarterError| CliError::Config(e.to_string()))
}

/// Reads or generates the panel named by the data section.
fn build_input_panel(l: &Loaded) -> Result<(Panel, Vec<GroupInfo>)> {
    let d = &l.cfg.data;
    if let Some(s) = &d.synthetic {
        let cfg =
            SyntheticConfig { t: s.t, n: s.n, c: s.c, k: s.k, m: s.m, noise_std: s.noise_std, ..Default::default() };
        let (panel, _) = generate_synthetic(&cfg, &mut RngStream::new(l.cfg.seed, STREAM_DATA))?;
        let groups = (1..=s.c as u8).map(|id| GroupInfo { id, name: format!("G{id}") }).collect();
        return Ok((panel, groups));
    }
    let (csv, man) = (d.csv.as_deref().unwrap_or_default(), d.manifest.as_deref().unwrap_or_default());
    let man_path = l.data_path(man);
    let manifest = parse_manifest(&read_text(&man_path)?).map_err(|e| CliError::from(e).context(man))?;
    let csv_path = l.data_path(csv);
    let mut raw = parse_raw_csv(read_text(&csv_path)?.as_bytes()).map_err(|e| CliError::from(e).context(csv))?;
    let start = d.start.as_deref().map(parse_date).transpose()?;
    let end = d.end.as_deref().map(parse_date).transpose()?;
    let keep: Vec<usize> = (0..raw.dates.len())
        .filter(|&i| start.is_none_or(|s| raw.dates[i] >= s) && end.is_none_or(|e| raw.dates[i] <= e))
        .collect();
    raw.dates = keep.iter().map(|&i| raw.dates[i]).collect();
    for c in raw.columns.iter_mut() {
        *c = keep.iter().map(|&i| c[i]).collect();
    }
    let opts = LoadOptions { forward_fill: d.forward_fill, min_window: d.min_window };
    let panel = build_panel(&raw, &manifest, opts).map_err(|e| CliError::from(e).context(csv))?;
    Ok((panel, manifest.groups))
}

struct Prepared {
    panel: Panel,
    groups: Vec<GroupInfo>,
}

impl Prepared {
    fn load(store: &mut Store) -> Result<Self> {
        let art = store.load(Stage::Prepare, PANEL)?;
        let groups = art.meta_field("groups")?;
        Ok(Self { panel: Panel::from_artifact(&art)?, groups })
    }

    fn manifest(&self) -> Manifest {
        Manifest { groups: self.groups.clone(), variables: self.panel.specs.clone() }
    }

    fn group_name(&self, id: u8) -> String {
        self.manifest().group_name(id)
    }

    /// Anchor group ids from their names, or the first `k` panel groups.
    fn anchors(&self, names: &[String], k: usize) -> Result<Vec<u8>> {
        let man = self.manifest();
        if names.is_empty() {
            let mut ids = self.panel.x_groups();
            ids.sort_unstable();
            ids.dedup();
            return Ok(ids.into_iter().take(k).collect());
        }
        names
            .iter()
            .map(|n| {
                man.resolve_group(n)
                    .ok_or_else(|| CliError::Config(format!("anchor group '{n}' is not in the manifest")))
            })
            .collect()
    }

    fn factor_spec(&self, l: &Loaded) -> Result<FactorSpec> {
        let f = &l.cfg.factors;
        let anchors = match f.method {
            Method::GsAeLinear | Method::GsAeNonlinear => self.anchors(&f.anchors, f.k)?,
            _ => Vec::new(),
        };
        l.cfg.factor_spec(anchors)
    }
}

pub fn prepare(l: &Loaded) -> Result<()> {
    let mut store = Store::open(l, Stage::Prepare)?;
    let (panel, groups) = build_input_panel(l)?;
    let mut art = panel.to_artifact();
    art.meta["groups"] = json!(groups);
    store.write_artifact(PANEL, art)?;
    store.write_with("panel_standardized.csv", |b| panel.write_csv(b))?;
    store.write_with("panel_summary.csv", |b| panel.write_summary_csv(b))?;
    log::info!(
        "panel: {} quarters ({} to {}), {} variables",
        panel.t(),
        panel.dates[0],
        panel.dates[panel.t() - 1],
        panel.n_vars()
    );
    store.finish()
}

fn write_cv_cells(cells: &[CvCell], out: &mut Vec<u8>) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "depth", "activation", "lambda0", "lambda1", "val_mse", "val_elbo"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for c in cells {
        w.write_record([
            c.k.to_string(),
            c.depth.to_string(),
            c.activation.to_string(),
            opt(c.lambda0),
            opt(c.lambda1),
            format!("{:e}", c.val_mse),
            format!("{:e}", c.val_elbo),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Data(format!("csv output failed: {e}"))
}

pub fn crossval(l: &Loaded) -> Result<()> {
    let mut store = Store::open(l, Stage::Crossval)?;
    let prep = Prepared::load(&mut store)?;
    let c = &l.cfg.crossval;
    let max_k = c.ks.iter().copied().max().unwrap_or(0);
    let cfg = CvConfig {
        folds: c.folds,
        scheme: c.scheme,
        train: TrainConfig { epochs: c.epochs, batch_size: c.batch_size, seed: l.cfg.seed, ..TrainConfig::default() },
        anchors: prep.anchors(&l.cfg.factors.anchors, max_k)?,
        hard_zero_anchors: l.cfg.factors.hard_zero_anchors,
    };
    let out = cross_validate(&prep.panel, &l.cfg.cv_grid()?, &cfg)?;
    store.write_with("crossval_architecture.csv", |b| write_cv_cells(&out.stage1, b).map_err(csv_error))?;
    store.write_with("crossval_ssl.csv", |b| write_cv_cells(&out.stage2, b).map_err(csv_error))?;
    store
        .write_json("crossval_best.json", json!({ "architecture": out.best_architecture(), "ssl": out.best_ssl() }))?;
    store.finish()
}

fn latent_labels(p: &GsAeParams, prep: &Prepared, spec: &FactorSpec) -> Vec<String> {
    (0..p.arch.k)
        .map(|k| spec.anchors.get(k).map(|g| prep.group_name(*g)).unwrap_or_else(|| format!("f{}", k + 1)))
        .collect()
}

pub fn train(l: &Loaded) -> Result<()> {
    let mut store = Store::open(l, Stage::Train)?;
    let prep = Prepared::load(&mut store)?;
    let spec = prep.factor_spec(l)?;
    let (extractor, trace) = fit_extractor(&prep.panel, &spec)?;
    match &extractor {
        Extractor::Pca => store.write_artifact(EXTRACTOR, Artifact::new(json!({ "kind": "pca_extractor" })))?,
        Extractor::Network(p) => {
            store.write_artifact(EXTRACTOR, p.to_artifact())?;
            if matches!(spec.method, Method::GsAeLinear | Method::GsAeNonlinear) {
                let layout = GroupLayout::new(&prep.panel.x_groups(), &spec.anchors)?;
                let groups: Vec<String> = layout.group_ids.iter().map(|g| prep.group_name(*g)).collect();
                let factors = latent_labels(p, &prep, &spec);
                store.write_with("b_heatmap.csv", |b| write_b_heatmap_csv(p, &groups, &factors, b))?;
            }
        }
    }
    if let Some(t) = trace {
        store.write_with("loss_trace.csv", |b| write_loss_trace_csv(&t, b))?;
    }
    store.finish()
}

fn load_extractor(store: &mut Store) -> Result<Extractor> {
    let art = store.load(Stage::Train, EXTRACTOR)?;
    let kind: String = art.meta_field("kind")?;
    Ok(if kind == "pca_extractor" {
        Extractor::Pca
    } else {
        Extractor::Network(Box::new(GsAeParams::from_artifact(&art)?))
    })
}

pub fn factors(l: &Loaded) -> Result<()> {
    let mut store = Store::open(l, Stage::Factors)?;
    let prep = Prepared::load(&mut store)?;
    let spec = prep.factor_spec(l)?;
    let extractor = load_extractor(&mut store)?;
    let mut f = apply_extractor(&prep.panel, &spec, &extractor)?;
    if f.anchor_names.is_some() {
        let names: Vec<String> = spec.anchors.iter().map(|g| prep.group_name(*g)).collect();
        f.anchor_names = Some(names);
    }
    store.write_artifact(FACTORS, f.to_artifact())?;
    store.write_with("factors.csv", |b| f.write_csv(b))?;
    store.write_with("correlations_top15.csv", |b| write_correlation_csv(&prep.panel, &f, 15, b))?;
    let ld = &l.cfg.loadings;
    let rng = RngStream::new(l.cfg.seed, STREAM_LOADINGS);
    let draws = gibbs_lambda_sigma(&f, &prep.panel.x_matrix(), ld.n_burn, ld.n_draws, &rng)?;
    let mut art = draws.to_artifact();
    art.meta["panel_variables"] = json!(prep.panel.x_names());
    store.write_artifact(LOADINGS, art)?;
    store.finish()
}

pub fn estimate_var(l: &Loaded) -> Result<()> {
    let mut store = Store::open(l, Stage::EstimateVar)?;
    let f = FactorSet::from_artifact(&store.load(Stage::Factors, FACTORS)?)?;
    let fit = fit_var(&f.combined(), &l.cfg.var_config(), &mut RngStream::new(l.cfg.seed, STREAM_VAR))?;
    let mut art = fit.to_artifact();
    art.meta["variables"] = json!(f.variable_names());
    art.meta["dates"] = json!(f.dates);
    store.write_artifact(VAR_DRAWS, art)?;
    let (rows, acceptance) = match &fit {
        VarFit::Tiv(d) => (d.diagnostics(), d.xi_acceptance.map(|a| ("xi", a))),
        VarFit::Tvp(c) => (c.diagnostics(), c.vol_acceptance.map(|a| ("volatility", a))),
    };
    let acc: Vec<(&str, f64)> = acceptance.into_iter().collect();
    store.write_with("var_diagnostics.csv", |b| write_diagnostics_csv(&rows, &acc, b))?;
    store.finish()
}

fn benchmark_config(cfg: &ForecastConfig) -> ForecastConfig {
    let mut b = cfg.clone();
    b.factor.method = Method::Pca;
    b.factor.anchors.clear();
    b.factor.slow_adjust = None;
    b.var.spec = VarSpec::Tiv;
    b
}

fn check_run(run: &ForecastRun) -> Result<()> {
    for f in &run.failures {
        log::warn!("{}: origin {} failed: {}", run.model, f.origin_date, f.message);
    }
    if run.records.is_empty() {
        return Err(CliError::Numeric(format!("{}: every forecast origin failed", run.model)));
    }
    Ok(())
}

pub fn forecast(l: &Loaded) -> Result<()> {
    let mut store = Store::open(l, Stage::Forecast)?;
    let prep = Prepared::load(&mut store)?;
    let fc = &l.cfg.forecast;
    let t = prep.panel.t();
    let cfg = ForecastConfig {
        factor: prep.factor_spec(l)?,
        var: l.cfg.var_config(),
        initial_window: fc.initial_window.unwrap_or(t * 3 / 4),
        max_horizon: fc.max_horizon,
    };
    let run = run_expanding_window(&prep.panel, &cfg, &RngStream::new(l.cfg.seed, STREAM_FORECAST))?;
    check_run(&run)?;
    let bench_cfg = benchmark_config(&cfg);
    let bench = if !fc.benchmark {
        None
    } else if bench_cfg == cfg {
        Some(run.clone())
    } else {
        let b = run_expanding_window(&prep.panel, &bench_cfg, &RngStream::new(l.cfg.seed, STREAM_BENCHMARK))?;
        check_run(&b)?;
        Some(b)
    };
    store.write_artifact("forecast_run.gsa", run.to_artifact())?;
    store.write_with("forecast_records.csv", |b| write_records_csv(&run, b))?;
    if let Some(b) = &bench {
        store.write_artifact("forecast_benchmark.gsa", b.to_artifact())?;
        store.write_with("forecast_benchmark_records.csv", |buf| write_records_csv(b, buf))?;
    }
    let table = compute_metrics(&run, bench.as_ref(), fc.point_rule)?;
    store.write_with("metrics.csv", |b| write_metrics_csv(&table, b))?;
    if bench.is_some() {
        store.write_with("cumulative_alpl.csv", |b| write_cumulative_csv(&table, b))?;
    }
    store.write_json("metrics.json", table.to_json())?;
    store.finish()
}

/// Picks columns of each draw and optionally rescales them.
fn select(draws: &[Matrix], cols: &[usize], scale: &[f64]) -> Vec<Matrix> {
    draws.iter().map(|d| Matrix::from_fn(d.nrows(), cols.len(), |h, j| d[(h, cols[j])] * scale[j])).collect()
}

pub fn irf(l: &Loaded) -> Result<()> {
    let mut store = Store::open(l, Stage::Irf)?;
    let prep = Prepared::load(&mut store)?;
    let f = FactorSet::from_artifact(&store.load(Stage::Factors, FACTORS)?)?;
    let loadings = LoadingDraws::from_artifact(&store.load(Stage::Factors, LOADINGS)?)?;
    let fit = VarFit::from_artifact(&store.load(Stage::EstimateVar, VAR_DRAWS)?)?;
    let cfg = &l.cfg.irf;
    let names = f.variable_names();
    let target_name = cfg.target.clone().or_else(|| f.observable_names.last().cloned());
    let target_name = target_name.ok_or_else(|| CliError::Config("no observable to shock".into()))?;
    let target = names
        .iter()
        .position(|n| *n == target_name)
        .ok_or_else(|| CliError::Config(format!("shock target '{target_name}' is not a VAR variable")))?;
    let col =
        prep.panel.index_of(&target_name).ok_or_else(|| CliError::Config(format!("'{target_name}' not in panel")))?;
    let shock = ShockSpec::basis_points(target, cfg.bps, prep.panel.stds[col]);

    let (times, labels): (Vec<usize>, Vec<String>) = match &fit {
        VarFit::Tiv(_) => (vec![0], vec!["constant".to_string()]),
        VarFit::Tvp(c) => {
            let lags = c.lags;
            let dates: Vec<Quarter> = if cfg.dates.is_empty() {
                f.dates[lags..].to_vec()
            } else {
                cfg.dates.iter().map(|d| parse_date(d)).collect::<Result<_>>()?
            };
            let mut times = Vec::with_capacity(dates.len());
            for d in &dates {
                let row = f.dates.iter().position(|x| x == d).filter(|r| *r >= lags);
                let row = row.ok_or_else(|| CliError::Config(format!("{d} is outside the estimation sample")))?;
                times.push(row - lags + 1);
            }
            (times, dates.iter().map(|d| d.to_string()).collect())
        }
    };
    let res: IrfResult = match &fit {
        VarFit::Tiv(d) => irf_over_time(d, &shock, cfg.horizons, &times)?,
        VarFit::Tvp(c) => irf_over_time(c, &shock, cfg.horizons, &times)?,
    };
    store.write_with("irf_var.csv", |b| write_irf_csv(&labels, &names, &res.q16, &res.q50, &res.q84, b))?;

    let x_names = prep.panel.x_names();
    let wanted: Vec<String> =
        if cfg.panel_variables.is_empty() { x_names.clone() } else { cfg.panel_variables.clone() };
    let cols: Vec<usize> = wanted
        .iter()
        .map(|n| {
            x_names
                .iter()
                .position(|x| x == n)
                .ok_or_else(|| CliError::Config(format!("panel variable '{n}' not found")))
        })
        .collect::<Result<_>>()?;
    let x_idx = prep.panel.x_indices();
    let scale: Vec<f64> =
        cols.iter().map(|&j| if cfg.original_units { prep.panel.stds[x_idx[j]] } else { 1.0 }).collect();
    let mean_lambda = loadings.mean_lambda();
    let (mut q16, mut q50, mut q84) = (vec![], vec![], vec![]);
    for per_draw in &res.responses {
        let mapped =
            if cfg.mean_lambda { irf_panel_fixed(per_draw, &mean_lambda)? } else { irf_panel(per_draw, &loadings)? };
        let (a, b, c) = summarize(&select(&mapped, &cols, &scale));
        q16.push(a);
        q50.push(b);
        q84.push(c);
    }
    store.write_with("irf_panel.csv", |b| write_irf_csv(&labels, &wanted, &q16, &q50, &q84, b))?;
    store.finish()
}

/// Writes a synthetic raw CSV and its manifest, ready for `prepare`.
pub fn synth(dir: &std::path::Path, cfg: &SyntheticConfig, seed: u64) -> Result<()> {
    let (panel, _) = generate_synthetic(cfg, &mut RngStream::new(seed, STREAM_DATA))?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(std::iter::once("date".to_string()).chain(panel.specs.iter().map(|s| s.name.clone())))
            .map_err(csv_error)?;
        for r in 0..panel.t() {
            let row = (0..panel.n_vars()).map(|c| format!("{:e}", panel.transformed[(r, c)]));
            w.write_record(std::iter::once(panel.dates[r].to_string()).chain(row)).map_err(csv_error)?;
        }
        w.flush().map_err(|e| CliError::io(dir, e))?;
    }
    let csv_path = dir.join("panel.csv");
    std::fs::write(&csv_path, &buf).map_err(|e| CliError::io(&csv_path, e))?;
    let groups = (1..=cfg.c as u8).map(|id| GroupInfo { id, name: format!("G{id}") }).collect();
    let manifest = Manifest { groups, variables: panel.specs.clone() };
    let man_path = dir.join("manifest.toml");
    let mut file = std::fs::File::create(&man_path).map_err(|e| CliError::io(&man_path, e))?;
    file.write_all(manifest.to_toml().as_bytes()).map_err(|e| CliError::io(&man_path, e))?;
    Ok(())
}

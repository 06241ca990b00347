use gsfavar::artifact::Artifact;
use gsfavar::bvar::{coef_vector, gibbs_tiv, simulate_var, McmcConfig, TivDraws, TivPrior, TvpChain, TvpState};
use gsfavar::data::{generate_synthetic, Panel, Quarter, SyntheticConfig};
use gsfavar::factors::Method;
use gsfavar::forecast::{
    compute_metrics, run_expanding_window, simulate_tiv, simulate_tvp, write_metrics_csv, write_records_csv,
    ForecastConfig, ForecastError, ForecastRecord, ForecastRun, PointRule,
};
use gsfavar::gsae::{Activation, SslConfig, TrainConfig};
use gsfavar::numeric::stats::{normal_log_pdf, normal_pdf, LN_2PI};
use gsfavar::numeric::{Matrix, RngStream, Vector};
use gsfavar::pipeline::{FactorSpec, VarConfig, VarSpec};
use proptest::prelude::*;

fn tiv(a: Vec<Matrix>, omega: Vec<Matrix>) -> TivDraws {
    let n = omega[0].nrows();
    let lags = a[0].ncols() / n;
    let xi = vec![[0.7, 0.1]; a.len()];
    TivDraws { n, lags, a, omega, xi, xi_acceptance: None, t_obs: 0 }
}

#[test]
fn zero_var_predictive_is_standard_normal() {
    let d = tiv(vec![Matrix::zeros(3, 3); 5], vec![Matrix::identity(3, 3); 5]);
    let hist = Matrix::from_element(2, 3, 0.4);
    let p = simulate_tiv(&d, &hist, 1, &mut RngStream::new(1, 0)).unwrap();
    let h1 = &p.horizons[0];
    assert!(h1.means.iter().all(|m| m.iter().all(|v| *v == 0.0)));
    let joint = h1.joint_log_density(&[0, 1, 2], &[0.0, 0.0, 0.0]).unwrap();
    assert!((joint + 1.5 * LN_2PI).abs() < 1e-12);
    assert!((h1.log_density(1, 0.0) + 0.5 * LN_2PI).abs() < 1e-12);
}

fn posterior_draws() -> (TivDraws, Matrix) {
    let a = Matrix::from_row_slice(2, 2, &[0.6, 0.1, -0.2, 0.4]);
    let omega = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let w = simulate_var(&a, &omega, 120, 50, &mut RngStream::new(4, 0)).unwrap();
    let prior = TivPrior::minnesota(&w, 1).unwrap();
    let d = gibbs_tiv(&w, &prior, 100, 2000, &mut RngStream::new(5, 0)).unwrap();
    let hist = w.rows(119, 1).into_owned();
    (d, hist)
}

/// The kernel estimate over pooled predictive samples targets the mixture
/// convolved with the kernel, whose density is the same mixture with every
/// component variance inflated by the squared bandwidth.
#[test]
fn mixture_density_matches_kernel_estimate() {
    let (d, hist) = posterior_draws();
    let mut pooled: Vec<f64> = Vec::new();
    let reference = simulate_tiv(&d, &hist, 1, &mut RngStream::new(0, 0)).unwrap();
    for rep in 0..100 {
        let p = simulate_tiv(&d, &hist, 1, &mut RngStream::new(10, rep)).unwrap();
        assert_eq!(p.horizons[0].means, reference.horizons[0].means);
        pooled.extend(p.horizons[0].samples.iter().map(|s| s[0]));
    }
    let bw = 0.1;
    let h1 = &reference.horizons[0];
    let center = h1.mean(0);
    for dx in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let x = center + dx;
        let kde = pooled.iter().map(|s| normal_pdf(x, *s, bw * bw)).sum::<f64>() / pooled.len() as f64;
        let mix = h1.means.iter().zip(&h1.covs).map(|(m, c)| normal_pdf(x, m[0], c[(0, 0)] + bw * bw)).sum::<f64>()
            / h1.len() as f64;
        assert!((kde / mix - 1.0).abs() < 0.02, "x = {x}: kde {kde} mixture {mix}");
    }
}

#[test]
fn frozen_tvp_reproduces_tiv_parameters() {
    let n = 2;
    let a = Matrix::from_row_slice(2, 4, &[0.5, 0.1, 0.05, 0.0, -0.1, 0.3, 0.0, 0.1]);
    let h = Vector::from_vec(vec![-0.4]);
    let ls = Vector::from_vec(vec![0.2, -0.3]);
    let state = TvpState {
        a: vec![coef_vector(&a); 3],
        h: vec![h; 3],
        log_s: vec![ls; 3],
        q_a: Matrix::zeros(8, 8),
        q_h: vec![Matrix::zeros(1, 1)],
        q_s: Matrix::zeros(2, 2),
        indicators: vec![vec![0; n]; 2],
    };
    let omega = state.omega(2);
    let chain = TvpChain { n, lags: 2, draws: vec![state.clone(), state], vol_acceptance: None, t_obs: 0 };
    let draws = tiv(vec![a.clone(), a], vec![omega.clone(), omega]);
    let hist = Matrix::from_row_slice(3, 2, &[0.1, 0.2, -0.3, 0.5, 0.7, -0.1]);
    let p_tvp = simulate_tvp(&chain, &hist, 1, &mut RngStream::new(1, 0)).unwrap();
    let p_tiv = simulate_tiv(&draws, &hist, 1, &mut RngStream::new(1, 0)).unwrap();
    assert_eq!(p_tvp.horizons[0].means, p_tiv.horizons[0].means);
    assert_eq!(p_tvp.horizons[0].covs, p_tiv.horizons[0].covs);
}

#[test]
fn explosive_draws_are_discarded() {
    let good = Matrix::from_element(1, 1, 0.5);
    let bad = Matrix::from_element(1, 1, 1e7);
    let d = tiv(vec![good.clone(), bad.clone(), good], vec![Matrix::identity(1, 1); 3]);
    let hist = Matrix::from_element(1, 1, 1.0);
    let p = simulate_tiv(&d, &hist, 2, &mut RngStream::new(1, 0)).unwrap();
    assert_eq!(p.discarded, 1);
    assert_eq!(p.horizons[1].len(), 2);
    let all_bad = tiv(vec![bad], vec![Matrix::identity(1, 1)]);
    assert!(matches!(simulate_tiv(&all_bad, &hist, 1, &mut RngStream::new(1, 0)), Err(ForecastError::AllExplosive(1))));
}

fn record(origin: usize, horizon: usize, point: f64, realized: f64, log_density: f64) -> ForecastRecord {
    ForecastRecord {
        origin,
        origin_date: Quarter::new(2000, 1).unwrap().offset(origin as i64),
        horizon,
        target: 0,
        point,
        median: point,
        realized,
        log_density,
        joint: log_density,
        n_draws: 10,
        discarded: 0,
    }
}

fn toy_run(model: &str, records: Vec<ForecastRecord>) -> ForecastRun {
    ForecastRun { model: model.into(), targets: vec!["GDPDEF".into()], max_horizon: 1, records, failures: vec![] }
}

#[test]
fn hand_computed_metrics() {
    let run = toy_run(
        "m",
        vec![
            record(0, 1, 0.5, 0.0, normal_log_pdf(0.0, 0.0, 1.0)),
            record(1, 1, -1.0, 1.0, normal_log_pdf(1.0, 0.0, 1.0)),
        ],
    );
    let t = compute_metrics(&run, None, PointRule::Mean).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!((t.rows[0].mae - 1.25).abs() < 1e-12);
    assert!((t.rows[0].alpl - (-0.5 * LN_2PI - 0.25)).abs() < 1e-12);
    let exact = toy_run("e", vec![record(0, 1, 0.3, 0.3, -1.0), record(1, 1, -2.0, -2.0, -1.0)]);
    assert_eq!(compute_metrics(&exact, None, PointRule::Mean).unwrap().rows[0].mae, 0.0);
}

#[test]
fn benchmark_against_itself() {
    let run =
        toy_run("m", vec![record(0, 1, 0.5, 0.0, -1.2), record(1, 1, -1.0, 1.0, -0.7), record(2, 1, 0.1, 0.2, -3.0)]);
    let t = compute_metrics(&run, Some(&run), PointRule::Mean).unwrap();
    assert_eq!(t.rows[0].rel_mae, Some(1.0));
    assert_eq!(t.rows[0].rel_alpl, Some(0.0));
    assert!(t.cumulative.iter().all(|c| c.value == 0.0));
    assert_eq!(t.joint[0].rel_alpl, Some(0.0));
}

#[test]
fn cumulative_score_ends_at_scaled_difference() {
    let model =
        toy_run("m", vec![record(0, 1, 0.0, 0.0, -1.0), record(1, 1, 0.0, 0.0, -0.5), record(2, 1, 0.0, 0.0, -2.0)]);
    let bench =
        toy_run("b", vec![record(0, 1, 0.0, 0.0, -1.5), record(1, 1, 0.0, 0.0, -1.5), record(2, 1, 0.0, 0.0, -1.0)]);
    let t = compute_metrics(&model, Some(&bench), PointRule::Mean).unwrap();
    let last = t.cumulative.last().unwrap().value;
    assert!((last - 3.0 * t.rows[0].rel_alpl.unwrap()).abs() < 1e-12);
    let short =
        toy_run("s", vec![record(0, 1, 0.0, 0.0, -1.0), record(2, 1, 0.0, 0.0, -1.0), record(3, 1, 0.0, 0.0, -1.0)]);
    assert!(matches!(compute_metrics(&model, Some(&short), PointRule::Mean), Err(ForecastError::OriginMismatch(_))));
}

#[test]
fn records_roundtrip_and_export() {
    let run = toy_run("m", vec![record(3, 1, 0.5, 0.0, -1.2), record(4, 1, -1.0, 1.0, f64::NEG_INFINITY)]);
    let back = ForecastRun::from_artifact(&Artifact::decode(&run.to_artifact().encode()).unwrap()).unwrap();
    assert_eq!(back, run);
    let mut buf = Vec::new();
    write_records_csv(&run, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("model,variable,horizon,origin,quantity,value\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 4);
    let mut buf = Vec::new();
    write_metrics_csv(&compute_metrics(&run, Some(&run), PointRule::Median).unwrap(), &mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().contains("m,GDPDEF,1,rel_mae,1e0"));
}

fn toy_panel(t: usize) -> Panel {
    let cfg = SyntheticConfig { t, n: 12, c: 4, k: 2, m: 1, ..Default::default() };
    generate_synthetic(&cfg, &mut RngStream::new(3, 0)).unwrap().0
}

fn config(method: Method, spec: VarSpec, initial_window: usize) -> ForecastConfig {
    ForecastConfig {
        factor: FactorSpec {
            method,
            k: 2,
            depth: 2,
            activation: Activation::Tanh,
            ssl: SslConfig::default(),
            anchors: vec![1, 2],
            train: TrainConfig { epochs: 5, ..Default::default() },
            slow_adjust: None,
        },
        var: VarConfig {
            spec,
            lags: 1,
            mcmc: McmcConfig { n_burn: 10, n_draws: 40, thin: 2, exact_vol_mh: false },
            sample_xi: false,
            q_scale: 1.0,
        },
        initial_window,
        max_horizon: 4,
    }
}

#[test]
fn expanding_window_bookkeeping() {
    let panel = toy_panel(48);
    let cfg = config(Method::Pca, VarSpec::Tiv, 45);
    let run = run_expanding_window(&panel, &cfg, &RngStream::new(1, 0)).unwrap();
    assert!(run.failures.is_empty());
    assert_eq!(run.origins(), vec![44, 45, 46]);
    // origins 44, 45, 46 have 3, 2 and 1 horizons with realized data
    assert_eq!(run.records.len(), 3 + 2 + 1);
    assert!(run.records.iter().all(|r| r.n_draws == 20));
    assert_eq!(run.model, "tiv-pca");
    let again = run_expanding_window(&panel, &cfg, &RngStream::new(1, 0)).unwrap();
    assert_eq!(run, again);
}

#[test]
fn forecasts_ignore_data_after_the_origin() {
    let panel = toy_panel(44);
    let origin = 41;
    let mut perturbed = panel.transformed.clone();
    for r in origin + 1..panel.t() {
        for c in 0..panel.n_vars() {
            perturbed[(r, c)] += 3.0 + 0.1 * c as f64;
        }
    }
    let other = Panel::from_transformed(perturbed, panel.specs.clone(), panel.dates.clone()).unwrap();
    for method in Method::ALL {
        for spec in [VarSpec::Tiv, VarSpec::Tvp] {
            let cfg = config(method, spec, origin + 1);
            let a = run_expanding_window(&panel, &cfg, &RngStream::new(2, 0)).unwrap();
            let b = run_expanding_window(&other, &cfg, &RngStream::new(2, 0)).unwrap();
            let first = |r: &ForecastRun| -> Vec<(u64, u64)> {
                r.records
                    .iter()
                    .filter(|x| x.origin == origin)
                    .map(|x| (x.point.to_bits(), x.median.to_bits()))
                    .collect()
            };
            assert!(!first(&a).is_empty(), "{method:?} {spec}: {:?}", a.failures);
            assert_eq!(first(&a), first(&b), "{method:?} {spec}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mixture_is_average_of_components(seed in 0u64..1000, x in -4.0f64..4.0) {
        let mut rng = RngStream::new(seed, 0);
        let k = 7;
        let a: Vec<Matrix> = (0..k).map(|_| Matrix::from_fn(2, 2, |_, _| 0.3 * rng.standard_normal())).collect();
        let omega: Vec<Matrix> = (0..k).map(|_| Matrix::from_diagonal(&Vector::from_fn(2, |_, _| 0.2 + rng.uniform()))).collect();
        let d = tiv(a, omega);
        let p = simulate_tiv(&d, &Matrix::from_element(1, 2, 0.5), 2, &mut rng).unwrap();
        for h in &p.horizons {
            let avg = h.component_log_densities(0, x).iter().map(|l| l.exp()).sum::<f64>() / h.len() as f64;
            prop_assert!((h.log_density(0, x).exp() - avg).abs() < 1e-12);
        }
    }

    #[test]
    fn mae_ignores_origin_order(perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(), vals in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 6)) {
        let recs: Vec<ForecastRecord> = vals.iter().enumerate().map(|(i, (p, r))| record(i, 1, *p, *r, -1.0)).collect();
        let shuffled: Vec<ForecastRecord> = perm.iter().map(|&i| recs[i].clone()).collect();
        let a = compute_metrics(&toy_run("a", recs), None, PointRule::Mean).unwrap();
        let b = compute_metrics(&toy_run("a", shuffled), None, PointRule::Mean).unwrap();
        prop_assert!((a.rows[0].mae - b.rows[0].mae).abs() < 1e-12);
    }
}

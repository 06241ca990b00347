//! End-to-end acceptance suite. Each criterion prints one PASS, FAIL or SKIP
//! line; the test fails if any criterion fails.
#![allow(clippy::excessive_precision)]

mod common;

use gsfavar::bvar::{
    ffbs, gibbs_tiv, kalman_filter, minnesota_variance, minnesota_variances, planted_drift_var, rts_smooth,
    simulate_var, tvp_mcmc, McmcConfig, Observation, TivPrior, TivSampler, TvpPrior, VarData,
};
use gsfavar::data::{generate_synthetic, load_panel, LoadOptions, Panel, SyntheticConfig};
use gsfavar::factors::Method;
use gsfavar::forecast::{
    compute_metrics, run_expanding_window, ForecastConfig, ForecastRecord, ForecastRun, PointRule,
};
use gsfavar::gsae::{
    elbo, extract_factors, fit_grouped, gamma_posterior, grad_elbo, inclusion_probability, ssl_penalty, Activation,
    Architecture, GsAeParams, SslConfig, TrainConfig,
};
use gsfavar::irf::{impact_vector, irf_var, ShockSpec};
use gsfavar::numeric::stats::{normal_log_pdf, quantile, spearman, LN_2PI};
use gsfavar::numeric::{cholesky, ols, pca, sample_inverse_wishart, Matrix, RngStream, Vector};
use gsfavar::pipeline::{FactorSpec, VarConfig, VarSpec};
use std::io::Write;
use std::time::{Duration, Instant};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = std::result::Result<String, String>;

type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> std::result::Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.1?}, limit {limit:?}"))
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

// Gradients

fn gradient_instance(act: Activation, seed: u64) -> (GsAeParams, Matrix, SslConfig) {
    let ssl = SslConfig::default();
    let arch = Architecture::evenly_spaced(12, 2, 4, 2, act).unwrap();
    let groups: Vec<usize> = (0..12).map(|i| i / 3).collect();
    let mut rng = RngStream::new(seed, 0);
    let mut p = GsAeParams::init_grouped(arch, groups, 2, &ssl, &mut rng).unwrap();
    for s in p.theta.slices_mut() {
        for v in s.iter_mut() {
            *v += 0.5 * rng.standard_normal();
        }
    }
    p.refresh_p(&ssl);
    let x = Matrix::from_fn(8, 12, |_, _| rng.standard_normal());
    (p, x, ssl)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let h = 1e-5;
    let mut report = Vec::new();
    for (name, act) in [("tanh", Activation::Tanh), ("leaky_relu", Activation::LeakyRelu { slope: 0.01 })] {
        let (p, x, ssl) = gradient_instance(act, 42);
        let analytic = grad_elbo(&p, Some(&ssl), &x).map_err(|e| e.to_string())?.0.to_flat();
        let flat = p.theta.to_flat();
        let mut q = p.clone();
        let mut worst = 0.0f64;
        for (i, a) in analytic.iter().enumerate() {
            let mut f = flat.clone();
            f[i] = flat[i] + h;
            q.theta.set_flat(&f);
            let up = elbo(&q, Some(&ssl), &x).unwrap();
            f[i] = flat[i] - h;
            q.theta.set_flat(&f);
            let down = elbo(&q, Some(&ssl), &x).unwrap();
            let n = (up - down) / (2.0 * h);
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-10));
        }
        ensure(analytic.len() >= 200, format!("{name}: only {} coordinates", analytic.len()))?;
        ensure(worst < 1e-5, format!("{name}: worst relative error {worst:e}"))?;
        report.push(format!("{name} {} coords worst {worst:.1e}", analytic.len()));
    }
    within(start, secs(10))?;
    Ok(report.join(", "))
}

fn criterion_2() -> Check {
    let equal = SslConfig { lambda0: 7.5, lambda1: 7.5, hard_zero_anchors: false };
    let b = Matrix::from_row_slice(2, 2, &[0.0, -3.0, 0.25, 40.0]);
    ensure(gamma_posterior(&b, &equal, 0).iter().all(|v| *v == 0.5), "equal rates do not give 1/2")?;
    let at_zero = inclusion_probability(0.0, &SslConfig::default());
    ensure((at_zero - 1.0 / 1001.0).abs() < 1e-17, format!("p(0) = {at_zero}"))?;
    // reference value from 50-digit arithmetic
    let cfg = SslConfig::default();
    let b = Matrix::from_row_slice(4, 2, &[0.5, 0.0, 0.003, -0.7, 0.05, 1.2, 0.0, -0.0125]);
    let value = ssl_penalty(&b, &gamma_posterior(&b, &cfg, 1), &cfg);
    let err = (value - 9.740181819730447609495332).abs();
    ensure(err < 1e-12, format!("penalty error {err:e}"))?;
    Ok(format!("p(0) = {at_zero:.6e}, penalty error {err:.1e}"))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let (panel, truth) =
        generate_synthetic(&SyntheticConfig::default(), &mut RngStream::new(2024, 0)).map_err(|e| e.to_string())?;
    let tc = TrainConfig { seed: 7, ..Default::default() };
    let (p, _, _) =
        fit_grouped(&panel, &[1, 2, 3], 2, Activation::Tanh, &SslConfig::default(), &tc).map_err(|e| e.to_string())?;
    let fs = extract_factors(&p, &panel, Method::GsAeNonlinear, None).map_err(|e| e.to_string())?;
    let mut rhos = Vec::new();
    for k in 0..3 {
        let a: Vec<f64> = fs.latent.column(k).iter().copied().collect();
        let b: Vec<f64> = truth.true_factors.column(k).iter().copied().collect();
        let rho = spearman(&a, &b);
        ensure(rho.abs() >= 0.9, format!("factor {k}: |rho| = {:.3}", rho.abs()))?;
        rhos.push(format!("{:.3}", rho.abs()));
    }
    let mut worst = 0.0f64;
    for c in 0..3 {
        for k in (0..3).filter(|k| *k != c) {
            worst = worst.max(p.theta.b[(c, k)].abs());
        }
    }
    ensure(worst < 0.01, format!("off-anchor |beta| {worst:e}"))?;
    within(start, secs(300))?;
    Ok(format!("|rho| [{}], max off-anchor |beta| {worst:.1e}", rhos.join(", ")))
}

// State-space smoothing

fn dense_smoother(obs: &[Observation], q: &Matrix, m0: &Vector, p0: &Matrix) -> (Vec<Vector>, Vec<Matrix>) {
    let d = m0.len();
    let t = obs.len();
    let na = d * (t + 1);
    let ny: usize = obs.iter().map(|o| o.y.len()).sum();
    let mut saa = Matrix::zeros(na, na);
    for s in 0..=t {
        for u in 0..=t {
            saa.view_mut((s * d, u * d), (d, d)).copy_from(&(p0 + q * s.min(u) as f64));
        }
    }
    let mut z = Matrix::zeros(ny, na);
    let mut r = Matrix::zeros(ny, ny);
    let mut y = Vector::zeros(ny);
    let mut row = 0;
    for (k, o) in obs.iter().enumerate() {
        let m = o.y.len();
        z.view_mut((row, (k + 1) * d), (m, d)).copy_from(&o.z);
        r.view_mut((row, row), (m, m)).copy_from(&o.r);
        y.rows_mut(row, m).copy_from(&o.y);
        row += m;
    }
    let mu_a = Vector::from_fn(na, |i, _| m0[i % d]);
    let say = &saa * z.transpose();
    let syy_inv = (&z * &saa * z.transpose() + r).try_inverse().unwrap();
    let mean = &mu_a + &say * &syy_inv * (y - &z * &mu_a);
    let cov = &saa - &say * &syy_inv * say.transpose();
    let means = (0..=t).map(|s| mean.rows(s * d, d).into_owned()).collect();
    let covs = (0..=t).map(|s| cov.view((s * d, s * d), (d, d)).into_owned()).collect();
    (means, covs)
}

fn state_space(d: usize, t: usize, seed: u64) -> (Vec<Observation>, Matrix, Vector, Matrix) {
    let mut rng = RngStream::new(seed, 0);
    let mut spd = |k: usize, scale: f64| {
        let a = Matrix::from_fn(k, k, |_, _| rng.standard_normal());
        a.transpose() * a * scale + Matrix::identity(k, k) * 0.1
    };
    let q = spd(d, 0.2);
    let p0 = spd(d, 1.0);
    let obs = (0..t)
        .map(|k| {
            let m = 1 + (k % 2);
            let r = spd(m, 0.5);
            let mut rng = RngStream::new(seed + 100, k as u64);
            Observation {
                y: Vector::from_fn(m, |_, _| rng.standard_normal()),
                z: Matrix::from_fn(m, d, |_, _| rng.standard_normal()),
                r,
            }
        })
        .collect();
    (obs, q, Vector::from_fn(d, |i, _| 0.3 * i as f64 - 0.1), p0)
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let n_paths = 20_000;
    let mut worst_moment = 0.0f64;
    let mut worst_z = 0.0f64;
    for d in [1, 2] {
        let (obs, q, m0, p0) = state_space(d, 6, 40 + d as u64);
        let f = kalman_filter(&obs, &q, &m0, &p0).map_err(|e| e.to_string())?;
        let (ms, cs) = rts_smooth(&f, &q);
        let (md, cd) = dense_smoother(&obs, &q, &m0, &p0);
        for t in 0..=6 {
            worst_moment = worst_moment.max((&ms[t] - &md[t]).amax()).max((&cs[t] - &cd[t]).amax());
        }
        let mut rng = RngStream::new(7, d as u64);
        let mut sum = vec![Vector::zeros(d); 7];
        for _ in 0..n_paths {
            let p = ffbs(&obs, &q, &m0, &p0, &mut rng).map_err(|e| e.to_string())?;
            for t in 0..=6 {
                sum[t] += &p[t];
            }
        }
        for t in 0..=6 {
            for i in 0..d {
                let se = (cd[t][(i, i)] / n_paths as f64).sqrt();
                worst_z = worst_z.max((sum[t][i] / n_paths as f64 - md[t][i]).abs() / se);
            }
        }
    }
    ensure(worst_moment < 1e-8, format!("smoothing moments differ by {worst_moment:e}"))?;
    ensure(worst_z < 4.0, format!("sample mean {worst_z:.2} SE from the smoothed mean"))?;
    within(start, secs(30))?;
    Ok(format!("moment error {worst_moment:.1e}, worst sample mean {worst_z:.2} SE"))
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let n_draws = 50_000;
    let v = Matrix::identity(3, 3) * 6.0;
    let mut rng = RngStream::new(2024, 0);
    let draws: Vec<Matrix> = (0..n_draws)
        .map(|_| sample_inverse_wishart(&v, 10.0, &mut rng))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mean = draws.iter().sum::<Matrix>() / n_draws as f64;
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let var = draws.iter().map(|d| (d[(i, j)] - mean[(i, j)]).powi(2)).sum::<f64>() / (n_draws - 1) as f64;
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((mean[(i, j)] - target).abs() / (var / n_draws as f64).sqrt());
        }
    }
    ensure(worst < 3.0, format!("mean entry {worst:.2} SE from identity"))?;
    within(start, secs(10))?;
    Ok(format!("worst entry {worst:.2} SE"))
}

fn criterion_6() -> Check {
    let sigma = [0.5, 2.0, 1.25];
    ensure(minnesota_variance(1, 0, 0, 0.7, 0.1, &sigma) == 0.7, "p=1 diagonal")?;
    ensure(minnesota_variance(2, 1, 1, 0.7, 0.1, &sigma) == 0.175, "p=2 diagonal")?;
    ensure(minnesota_variance(2, 0, 1, 0.7, 0.1, &sigma) == 0.1 / 4.0 * 0.5 / 2.0, "p=2 off-diagonal")?;
    ensure(minnesota_variance(3, 2, 0, 0.7, 0.1, &sigma) == 0.1 / 9.0 * 1.25 / 0.5, "p=3 off-diagonal")?;
    let v = minnesota_variances(3, 2, 0.7, 0.1, &sigma);
    for i in 0..3 {
        for p in 1..=2 {
            for j in 0..3 {
                let expect = if i == j { 0.7 / (p * p) as f64 } else { 0.1 / (p * p) as f64 * sigma[i] / sigma[j] };
                ensure(v[i * 6 + (p - 1) * 3 + j] == expect, format!("entry i={i} p={p} j={j}"))?;
            }
        }
    }
    Ok("all 18 prior variances exact, p=2 diagonal 0.175".into())
}

fn three_var_two_lag(t: usize, seed: u64) -> Matrix {
    let a = Matrix::from_row_slice(
        3,
        6,
        &[0.5, 0.1, 0.0, 0.1, 0.0, 0.05, -0.1, 0.4, 0.1, 0.0, 0.1, 0.0, 0.05, 0.0, 0.3, 0.0, -0.05, 0.2],
    );
    let omega = Matrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 0.8, 0.2, 0.1, 0.2, 0.6]);
    simulate_var(&a, &omega, t, 200, &mut RngStream::new(seed, 0)).unwrap()
}

fn batch_se(x: &[f64], batches: usize) -> f64 {
    let size = x.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| x[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    (means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / ((batches - 1) * batches) as f64).sqrt()
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let w = three_var_two_lag(300, 2);
    let prior = TivPrior::minnesota(&w, 2).map_err(|e| e.to_string())?;
    let data = VarData::new(&w, 2).map_err(|e| e.to_string())?;
    let sampler = TivSampler::new(&data);
    let var = minnesota_variances(3, 2, prior.xi1, prior.xi2, &prior.sigma);

    // coefficient block at a fixed Ω against its closed-form posterior mean
    let b = ols(&data.x, &data.y).map_err(|e| e.to_string())?;
    let e = &data.y - &data.x * b;
    let omega = e.transpose() * e / data.t() as f64;
    let exact = sampler.conditional_mean(&omega, &var).map_err(|e| e.to_string())?;
    let mut rng = RngStream::new(3, 0);
    let n = 4000;
    let draws: Vec<Vector> = (0..n)
        .map(|_| sampler.step_coefficients(&omega, &var, &mut rng))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut worst_fixed = 0.0f64;
    for k in 0..exact.len() {
        let xs: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        worst_fixed = worst_fixed.max((m - exact[k]).abs() / (sd / (n as f64).sqrt()));
    }

    // full Gibbs chain against the average of conditional means over its Ω draws
    let d = gibbs_tiv(&w, &prior, 200, 4000, &mut RngStream::new(9, 0)).map_err(|e| e.to_string())?;
    let cond: Vec<Vector> = d
        .omega
        .iter()
        .map(|o| sampler.conditional_mean(o, &var))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut worst_chain = 0.0f64;
    for k in 0..18 {
        let diff: Vec<f64> = d.a.iter().zip(&cond).map(|(a, c)| gsfavar::bvar::coef_vector(a)[k] - c[k]).collect();
        let m = diff.iter().sum::<f64>() / diff.len() as f64;
        worst_chain = worst_chain.max(m.abs() / batch_se(&diff, 40));
    }
    ensure(worst_fixed < 4.0, format!("fixed-covariance draws {worst_fixed:.2} SE off"))?;
    ensure(worst_chain < 4.0, format!("chain mean {worst_chain:.2} SE off"))?;
    within(start, secs(120))?;
    Ok(format!("fixed covariance {worst_fixed:.2} SE, full chain {worst_chain:.2} SE"))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let sim = planted_drift_var(200, &mut RngStream::new(13, 0));
    let prior = TvpPrior::minnesota(&sim.w, 1).map_err(|e| e.to_string())?;
    let cfg = McmcConfig { n_burn: 500, n_draws: 2000, thin: 1, exact_vol_mh: false };
    let chain = tvp_mcmc(&sim.w, &prior, &cfg, &mut RngStream::new(5, 0)).map_err(|e| e.to_string())?;
    let path = chain.mean_coefficient_path();
    // path index t covers input row t, generated by true entry t - 1
    let truth = &sim.coefficients;
    let rmse = |est: &dyn Fn(usize) -> Vector| -> f64 {
        let mut sse = 0.0;
        let mut count = 0;
        for t in 1..path.len() {
            sse += (est(t) - &truth[t - 1]).norm_squared();
            count += truth[t - 1].len();
        }
        (sse / count as f64).sqrt()
    };
    let tvp = rmse(&|t| path[t].clone());
    let data = VarData::new(&sim.w, 1).map_err(|e| e.to_string())?;
    let b = ols(&data.x, &data.y).map_err(|e| e.to_string())?;
    let ols_vec = Vector::from_column_slice(b.as_slice());
    let ols_rmse = rmse(&|_| ols_vec.clone());
    let average = truth.iter().sum::<Vector>() / truth.len() as f64;
    let oracle_rmse = rmse(&|_| average.clone());
    let best_constant = ols_rmse.min(oracle_rmse);

    let mut covered = 0;
    let mut total = 0;
    for t in 1..path.len() {
        for i in 0..3 {
            let vals: Vec<f64> = chain.draws.iter().map(|d| d.log_s[t][i]).collect();
            let (lo, hi) = (quantile(&vals, 0.16), quantile(&vals, 0.84));
            let x = sim.log_vol[t - 1][i];
            covered += usize::from(lo <= x && x <= hi);
            total += 1;
        }
    }
    let coverage = covered as f64 / total as f64;
    ensure(tvp < best_constant, format!("TVP RMSE {tvp:.4} vs best constant {best_constant:.4}"))?;
    ensure((0.5..=0.85).contains(&coverage), format!("log-volatility band coverage {coverage:.3}"))?;
    within(start, secs(600))?;
    Ok(format!(
        "RMSE {tvp:.4} vs constant {best_constant:.4} (OLS {ols_rmse:.4}, true average {oracle_rmse:.4}), coverage {coverage:.3}"
    ))
}

fn companion_oracle(a: &Matrix, b: &Vector, horizons: usize) -> Matrix {
    let n = a.nrows();
    let np = a.ncols();
    let mut f = Matrix::zeros(np, np);
    f.rows_mut(0, n).copy_from(a);
    for i in n..np {
        f[(i, i - n)] = 1.0;
    }
    let mut state = Vector::zeros(np);
    state.rows_mut(0, n).copy_from(b);
    let mut power = Matrix::identity(np, np);
    let mut out = Matrix::zeros(horizons + 1, n);
    for h in 0..=horizons {
        out.set_row(h, &(&power * &state).rows(0, n).transpose());
        power = &f * power;
    }
    out
}

fn criterion_9() -> Check {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=4 {
        for lags in 1..=3 {
            for seed in 0..10u64 {
                let mut rng = RngStream::new(seed, (n * 10 + lags) as u64);
                let a = Matrix::from_fn(n, n * lags, |_, _| 0.35 * rng.standard_normal() / (n * lags) as f64);
                let m = Matrix::from_fn(n, n, |_, _| rng.standard_normal());
                let l = cholesky(&(m.transpose() * m + Matrix::identity(n, n) * 0.3)).map_err(|e| e.to_string())?;
                let size = 2.0 * rng.standard_normal();
                let shock = ShockSpec { target: n - 1, size };
                let r = irf_var(&a, &l, &shock, 20).map_err(|e| e.to_string())?;
                let oracle = companion_oracle(&a, &impact_vector(&l, &shock).unwrap(), 20);
                worst = worst.max((&r - oracle).amax());
                let doubled = irf_var(&a, &l, &ShockSpec { target: n - 1, size: 2.0 * size }, 20).unwrap();
                ensure(doubled == &r * 2.0, format!("shock linearity n={n} lags={lags}"))?;
                let zero = irf_var(&Matrix::zeros(n, n * lags), &l, &shock, 20).unwrap();
                ensure(zero.rows(1, 20).iter().all(|v| *v == 0.0), "A = 0 responds after impact")?;
                cases += 1;
            }
        }
    }
    ensure(worst < 1e-12, format!("companion error {worst:e}"))?;
    Ok(format!("{cases} systems, companion error {worst:.1e}"))
}

fn record(origin: usize, point: f64, realized: f64, log_density: f64) -> ForecastRecord {
    ForecastRecord {
        origin,
        origin_date: gsfavar::data::Quarter::new(2000, 1).unwrap().offset(origin as i64),
        horizon: 1,
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

fn toy_run(records: Vec<ForecastRecord>) -> ForecastRun {
    ForecastRun { model: "m".into(), targets: vec!["y".into()], max_horizon: 1, records, failures: vec![] }
}

fn lookahead_config(method: Method, spec: VarSpec, initial_window: usize) -> ForecastConfig {
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

fn criterion_10() -> Check {
    let run = toy_run(vec![
        record(0, 0.5, 0.0, normal_log_pdf(0.0, 0.0, 1.0)),
        record(1, -1.0, 1.0, normal_log_pdf(1.0, 0.0, 1.0)),
    ]);
    let t = compute_metrics(&run, None, PointRule::Mean).map_err(|e| e.to_string())?;
    let mae_err = (t.rows[0].mae - 1.25).abs();
    let alpl_err = (t.rows[0].alpl - (-0.5 * LN_2PI - 0.25)).abs();
    ensure(mae_err < 1e-12 && alpl_err < 1e-12, format!("MAE error {mae_err:e}, ALPL error {alpl_err:e}"))?;
    let own = compute_metrics(&run, Some(&run), PointRule::Mean).map_err(|e| e.to_string())?;
    ensure(own.rows[0].rel_mae == Some(1.0) && own.rows[0].rel_alpl == Some(0.0), "benchmark against itself")?;

    let cfg = SyntheticConfig { t: 44, n: 12, c: 4, k: 2, m: 1, ..Default::default() };
    let panel = generate_synthetic(&cfg, &mut RngStream::new(3, 0)).map_err(|e| e.to_string())?.0;
    let origin = 41;
    let mut perturbed = panel.transformed.clone();
    for r in origin + 1..panel.t() {
        for c in 0..panel.n_vars() {
            perturbed[(r, c)] += 3.0 + 0.1 * c as f64;
        }
    }
    let other =
        Panel::from_transformed(perturbed, panel.specs.clone(), panel.dates.clone()).map_err(|e| e.to_string())?;
    let mut pipelines = 0;
    for method in Method::ALL {
        for spec in [VarSpec::Tiv, VarSpec::Tvp] {
            let cfg = lookahead_config(method, spec, origin + 1);
            let a = run_expanding_window(&panel, &cfg, &RngStream::new(2, 0)).map_err(|e| e.to_string())?;
            let b = run_expanding_window(&other, &cfg, &RngStream::new(2, 0)).map_err(|e| e.to_string())?;
            let first = |r: &ForecastRun| -> Vec<(u64, u64, u64)> {
                r.records
                    .iter()
                    .filter(|x| x.origin == origin)
                    .map(|x| (x.point.to_bits(), x.median.to_bits(), x.n_draws as u64))
                    .collect()
            };
            ensure(!first(&a).is_empty(), format!("{method:?} {spec}: no forecasts at the origin"))?;
            ensure(first(&a) == first(&b), format!("{method:?} {spec} looks ahead"))?;
            pipelines += 1;
        }
    }
    Ok(format!("MAE error {mae_err:.1e}, ALPL error {alpl_err:.1e}, {pipelines} pipelines free of look-ahead"))
}

fn criterion_11() -> Check {
    let toy = common::Toy::new();
    let verbs = ["prepare", "crossval", "train", "factors", "estimate-var", "forecast", "irf"];
    let mut compared = 0;
    for verb in verbs {
        let out = toy.run(verb, &[]);
        ensure(out.status.success(), format!("{verb}: {}", common::stderr(&out)))?;
        let first = toy.snapshot();
        let out = toy.run(verb, &[]);
        ensure(out.status.success(), format!("{verb} (repeat): {}", common::stderr(&out)))?;
        let second = toy.snapshot();
        for (name, bytes) in &first {
            ensure(second.get(name) == Some(bytes), format!("{verb}: {name} changed on repeat"))?;
        }
        ensure(first.len() == second.len(), format!("{verb}: file set changed"))?;
        compared = first.len();
    }
    Ok(format!("{} commands repeated, {compared} files byte-identical", verbs.len()))
}

const FRED_CSV: &str = "GSFAVAR_FREDQD_CSV";
const FRED_MANIFEST: &str = "GSFAVAR_FREDQD_MANIFEST";

fn criterion_12() -> Outcome {
    let (Ok(csv), Ok(manifest)) = (std::env::var(FRED_CSV), std::env::var(FRED_MANIFEST)) else {
        return Outcome::Skip(format!("set {FRED_CSV} and {FRED_MANIFEST} to run"));
    };
    let check = || -> Check {
        let panel = load_panel(csv.as_ref(), manifest.as_ref(), LoadOptions::default()).map_err(|e| e.to_string())?;
        let share: f64 = pca(&panel.x_matrix(), 5).map_err(|e| e.to_string())?.explained_ratio.sum();
        ensure((0.62..=0.72).contains(&share), format!("5 PCs explain {share:.3}"))?;
        let mut model = lookahead_config(Method::Pca, VarSpec::Tvp, panel.t() * 3 / 4);
        model.factor.k = 5;
        model.factor.anchors.clear();
        model.var.lags = 2;
        model.var.mcmc = McmcConfig { n_burn: 500, n_draws: 1000, thin: 2, exact_vol_mh: false };
        model.max_horizon = 1;
        let mut bench = model.clone();
        bench.var.spec = VarSpec::Tiv;
        let m = run_expanding_window(&panel, &model, &RngStream::new(1, 0)).map_err(|e| e.to_string())?;
        let b = run_expanding_window(&panel, &bench, &RngStream::new(1, 0)).map_err(|e| e.to_string())?;
        let t = compute_metrics(&m, Some(&b), PointRule::Mean).map_err(|e| e.to_string())?;
        let mut rel = Vec::new();
        for row in t.rows.iter().filter(|r| r.horizon == 1) {
            let r = row.rel_mae.unwrap_or(f64::NAN);
            ensure(r < 1.0, format!("{}: relative MAE {r:.3}", row.variable))?;
            rel.push(format!("{} {r:.3}", row.variable));
        }
        Ok(format!("5 PCs explain {share:.3}; relative MAE {}", rel.join(", ")))
    };
    match check() {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

fn outcome(c: Check) -> Outcome {
    match c {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("gradient oracle", Box::new(|| outcome(criterion_1()))),
        ("SSL closed forms", Box::new(|| outcome(criterion_2()))),
        ("identifiability", Box::new(|| outcome(criterion_3()))),
        ("FFBS oracle", Box::new(|| outcome(criterion_4()))),
        ("inverse-Wishart moments", Box::new(|| outcome(criterion_5()))),
        ("Minnesota prior", Box::new(|| outcome(criterion_6()))),
        ("TIV Gibbs vs analytic", Box::new(|| outcome(criterion_7()))),
        ("TVP recovery", Box::new(|| outcome(criterion_8()))),
        ("IRF oracle", Box::new(|| outcome(criterion_9()))),
        ("forecast metrics", Box::new(|| outcome(criterion_10()))),
        ("CLI determinism", Box::new(|| outcome(criterion_11()))),
        ("FRED-QD panel", Box::new(criterion_12)),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Outcome::Pass(s) => ("PASS", s),
            Outcome::Fail(s) => {
                failed.push(i + 1);
                ("FAIL", s)
            }
            Outcome::Skip(s) => ("SKIP", s),
        };
        // written past the harness capture so the lines show in plain `cargo test` output
        let line = format!("criterion {:>2} {tag} {name}: {detail} [{:.1?}]\n", i + 1, start.elapsed());
        std::io::stderr().write_all(line.as_bytes()).unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

use super::{BvarError, Result, TivDraws, TvpChain};
use crate::numeric::stats::{mean, quantile, variance};
use std::io::Write;

/// Summary of one scalar trace across retained draws.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub q16: f64,
    pub q50: f64,
    pub q84: f64,
    pub lag1: f64,
    /// Effective sample size from autocorrelations summed up to the first
    /// non-positive lag.
    pub ess: f64,
}

fn autocorr(x: &[f64], m: f64, v: f64, lag: usize) -> f64 {
    let n = x.len();
    let s: f64 = (lag..n).map(|i| (x[i] - m) * (x[i - lag] - m)).sum();
    s / (n as f64 * v)
}

pub fn summarize_trace(parameter: impl Into<String>, x: &[f64]) -> TraceSummary {
    let n = x.len();
    let m = mean(x);
    let v = if n > 1 { variance(x) } else { 0.0 };
    let (lag1, ess) = if v > 0.0 {
        let mut sum = 0.0;
        for lag in 1..n {
            let r = autocorr(x, m, v, lag);
            if r <= 0.0 {
                break;
            }
            sum += r;
        }
        (autocorr(x, m, v, 1), n as f64 / (1.0 + 2.0 * sum))
    } else {
        (0.0, n as f64)
    };
    TraceSummary {
        parameter: parameter.into(),
        mean: m,
        sd: v.sqrt(),
        q16: quantile(x, 0.16),
        q50: quantile(x, 0.5),
        q84: quantile(x, 0.84),
        lag1,
        ess,
    }
}

fn collect(name: String, draws: usize, f: impl Fn(usize) -> f64) -> TraceSummary {
    let x: Vec<f64> = (0..draws).map(f).collect();
    summarize_trace(name, &x)
}

impl TivDraws {
    /// Traces of every coefficient, the lower triangle of `Ω` and `ξ`.
    pub fn diagnostics(&self) -> Vec<TraceSummary> {
        let d = self.len();
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n * self.lags {
                out.push(collect(format!("a[{i},{j}]"), d, |k| self.a[k][(i, j)]));
            }
        }
        for i in 0..self.n {
            for j in 0..=i {
                out.push(collect(format!("omega[{i},{j}]"), d, |k| self.omega[k][(i, j)]));
            }
        }
        for (c, name) in ["xi1", "xi2"].into_iter().enumerate() {
            out.push(collect(name.to_string(), d, |k| self.xi[k][c]));
        }
        out
    }
}

impl TvpChain {
    /// Traces of the time-averaged states and of the diagonals of the
    /// random-walk covariances.
    pub fn diagnostics(&self) -> Vec<TraceSummary> {
        let d = self.len();
        let mut out = Vec::new();
        let Some(first) = self.draws.first() else {
            return out;
        };
        let avg =
            |path: &[crate::numeric::Vector], i: usize| path.iter().map(|v| v[i]).sum::<f64>() / path.len() as f64;
        for i in 0..first.a[0].len() {
            out.push(collect(format!("a_avg[{i}]"), d, |k| avg(&self.draws[k].a, i)));
        }
        for i in 0..first.h[0].len() {
            out.push(collect(format!("h_avg[{i}]"), d, |k| avg(&self.draws[k].h, i)));
        }
        for i in 0..self.n {
            out.push(collect(format!("log_s_avg[{i}]"), d, |k| avg(&self.draws[k].log_s, i)));
        }
        for i in 0..first.q_a.nrows() {
            out.push(collect(format!("q_a[{i},{i}]"), d, |k| self.draws[k].q_a[(i, i)]));
        }
        for (m, block) in first.q_h.iter().enumerate() {
            for i in 0..block.nrows() {
                out.push(collect(format!("q_h{}[{i},{i}]", m + 1), d, |k| self.draws[k].q_h[m][(i, i)]));
            }
        }
        for i in 0..self.n {
            out.push(collect(format!("q_s[{i},{i}]"), d, |k| self.draws[k].q_s[(i, i)]));
        }
        out
    }
}

/// CSV `parameter,mean,sd,q16,q50,q84,lag1,ess`, followed by one
/// `acceptance` row per Metropolis step that ran.
pub fn write_diagnostics_csv<W: Write>(rows: &[TraceSummary], acceptance: &[(&str, f64)], out: W) -> Result<()> {
    let err = |e: csv::Error| BvarError::ShapeMismatch(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "mean", "sd", "q16", "q50", "q84", "lag1", "ess"]).map_err(err)?;
    for r in rows {
        let vals = [r.mean, r.sd, r.q16, r.q50, r.q84, r.lag1, r.ess].map(|v| format!("{v:e}"));
        w.write_record(std::iter::once(r.parameter.clone()).chain(vals)).map_err(err)?;
    }
    for (name, rate) in acceptance {
        w.write_record([
            format!("acceptance.{name}"),
            format!("{rate:e}"),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| BvarError::ShapeMismatch(format!("csv output failed: {e}")))?;
    Ok(())
}

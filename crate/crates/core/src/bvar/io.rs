use super::{BvarError, Result, TivDraws, TvpChain, TvpDraw};
use crate::artifact::{Array, Artifact};
use crate::numeric::{Matrix, Vector};
use serde_json::json;

fn stack_paths(name: &str, paths: impl Iterator<Item = Vec<Vector>>, count: usize, len: usize, dim: usize) -> Array {
    let mut data = Vec::with_capacity(count * len * dim);
    for p in paths {
        for v in p {
            data.extend_from_slice(v.as_slice());
        }
    }
    Array::new(name, vec![count, len, dim], data)
}

fn unstack_paths(a: &Array) -> Result<Vec<Vec<Vector>>> {
    let [count, len, dim] = a.dims[..] else {
        return Err(BvarError::ShapeMismatch(format!("'{}' is not a stack of paths", a.name)));
    };
    Ok((0..count)
        .map(|c| {
            (0..len).map(|t| Vector::from_column_slice(&a.data[(c * len + t) * dim..(c * len + t + 1) * dim])).collect()
        })
        .collect())
}

fn expect(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(BvarError::ShapeMismatch(what.to_string()))
    }
}

impl TivDraws {
    pub fn to_artifact(&self) -> Artifact {
        let mut a = Artifact::new(json!({
            "kind": "tiv_draws",
            "n": self.n,
            "lags": self.lags,
            "t_obs": self.t_obs,
            "xi_acceptance": self.xi_acceptance,
        }));
        let q = self.n * self.lags;
        a.push(Array::from_matrices("a", &self.a, self.n, q));
        a.push(Array::from_matrices("omega", &self.omega, self.n, self.n));
        a.push(Array::new("xi", vec![self.xi.len(), 2], self.xi.iter().flatten().copied().collect()));
        a
    }

    pub fn from_artifact(art: &Artifact) -> Result<Self> {
        let kind: String = art.meta_field("kind")?;
        expect(kind == "tiv_draws", "artifact does not hold TIV draws")?;
        let n: usize = art.meta_field("n")?;
        let lags: usize = art.meta_field("lags")?;
        let a = art.get("a")?.to_matrices()?;
        let omega = art.get("omega")?.to_matrices()?;
        let xi_arr = art.get("xi")?;
        expect(xi_arr.dims.len() == 2 && xi_arr.dims[1] == 2, "xi must be draws×2")?;
        let xi: Vec<[f64; 2]> = xi_arr.data.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        expect(a.len() == omega.len() && a.len() == xi.len(), "draw counts differ")?;
        expect(a.iter().all(|m| m.shape() == (n, n * lags)), "coefficient shape")?;
        expect(omega.iter().all(|m| m.shape() == (n, n)), "covariance shape")?;
        Ok(Self {
            n,
            lags,
            a,
            omega,
            xi,
            xi_acceptance: art.meta_field("xi_acceptance")?,
            t_obs: art.meta_field("t_obs")?,
        })
    }
}

impl TvpChain {
    pub fn to_artifact(&self) -> Artifact {
        let count = self.draws.len();
        let len = self.draws.first().map(|d| d.a.len()).unwrap_or(0);
        let n = self.n;
        let d_a = n * n * self.lags;
        let d_h = n * (n - 1) / 2;
        let mut a = Artifact::new(json!({
            "kind": "tvp_chain",
            "n": n,
            "lags": self.lags,
            "t_obs": self.t_obs,
            "vol_acceptance": self.vol_acceptance,
        }));
        a.push(stack_paths("a", self.draws.iter().map(|d| d.a.clone()), count, len, d_a));
        a.push(stack_paths("h", self.draws.iter().map(|d| d.h.clone()), count, len, d_h));
        a.push(stack_paths("log_s", self.draws.iter().map(|d| d.log_s.clone()), count, len, n));
        let qa: Vec<Matrix> = self.draws.iter().map(|d| d.q_a.clone()).collect();
        a.push(Array::from_matrices("q_a", &qa, d_a, d_a));
        for m in 1..n {
            let qh: Vec<Matrix> = self.draws.iter().map(|d| d.q_h[m - 1].clone()).collect();
            a.push(Array::from_matrices(format!("q_h.{m}"), &qh, m, m));
        }
        let qs: Vec<Matrix> = self.draws.iter().map(|d| d.q_s.clone()).collect();
        a.push(Array::from_matrices("q_s", &qs, n, n));
        let ind: Vec<f64> = self.draws.iter().flat_map(|d| d.indicators.iter().flatten().map(|v| *v as f64)).collect();
        a.push(Array::new("indicators", vec![count, len.saturating_sub(1), n], ind));
        a
    }

    pub fn from_artifact(art: &Artifact) -> Result<Self> {
        let kind: String = art.meta_field("kind")?;
        expect(kind == "tvp_chain", "artifact does not hold a TVP chain")?;
        let n: usize = art.meta_field("n")?;
        let lags: usize = art.meta_field("lags")?;
        expect(n >= 1 && lags >= 1, "empty VAR")?;
        let a = unstack_paths(art.get("a")?)?;
        let h = unstack_paths(art.get("h")?)?;
        let log_s = unstack_paths(art.get("log_s")?)?;
        let q_a = art.get("q_a")?.to_matrices()?;
        let q_s = art.get("q_s")?.to_matrices()?;
        let q_h: Vec<Vec<Matrix>> =
            (1..n).map(|m| art.get(&format!("q_h.{m}"))?.to_matrices()).collect::<std::result::Result<_, _>>()?;
        let ind = art.get("indicators")?;
        let count = a.len();
        expect([h.len(), log_s.len(), q_a.len(), q_s.len()].iter().all(|c| *c == count), "draw counts differ")?;
        expect(q_h.iter().all(|q| q.len() == count), "draw counts differ")?;
        let len = a.first().map(|p| p.len()).unwrap_or(0);
        expect(ind.dims == [count, len.saturating_sub(1), n], "indicator shape")?;
        let d_a = n * n * lags;
        expect(a.iter().flatten().all(|v| v.len() == d_a), "coefficient state dimension")?;
        expect(log_s.iter().flatten().all(|v| v.len() == n), "volatility state dimension")?;
        expect(h.iter().flatten().all(|v| v.len() == n * (n - 1) / 2), "covariance state dimension")?;
        expect(h.iter().chain(&log_s).all(|p| p.len() == len), "path lengths differ")?;
        let draws = (0..count)
            .map(|c| TvpDraw {
                a: a[c].clone(),
                h: h[c].clone(),
                log_s: log_s[c].clone(),
                q_a: q_a[c].clone(),
                q_h: q_h.iter().map(|q| q[c].clone()).collect(),
                q_s: q_s[c].clone(),
                indicators: (0..len.saturating_sub(1))
                    .map(|t| (0..n).map(|m| ind.data[(c * (len - 1) + t) * n + m] as u8).collect())
                    .collect(),
            })
            .collect();
        Ok(Self { n, lags, draws, vol_acceptance: art.meta_field("vol_acceptance")?, t_obs: art.meta_field("t_obs")? })
    }
}

//! Two-step estimation: factor extraction on a panel, then a Bayesian VAR on
//! the latent factors and observables.

use crate::artifact::{Artifact, ArtifactError};
use crate::bvar::{gibbs_tiv, tvp_mcmc, BvarError, McmcConfig, TivDraws, TivPrior, TvpChain, TvpPrior};
use crate::data::{DataError, Panel};
use crate::factors::{pca_factors, slow_moving_adjust, FactorError, FactorSet, Method};
use crate::gsae::{
    extract_factors, fit_grouped, fit_plain, Activation, GsAeError, GsAeParams, LossTrace, SslConfig, TrainConfig,
};
use crate::numeric::{pca, Matrix, NumericError, RngStream};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    GsAe(#[from] GsAeError),
    #[error(transparent)]
    Bvar(#[from] BvarError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarSpec {
    Tiv,
    Tvp,
}

impl fmt::Display for VarSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarSpec::Tiv => "tiv",
            VarSpec::Tvp => "tvp",
        })
    }
}

impl std::str::FromStr for VarSpec {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tiv" => Ok(VarSpec::Tiv),
            "tvp" => Ok(VarSpec::Tvp),
            other => Err(PipelineError::Config(format!("unknown VAR specification '{other}' (expected tiv or tvp)"))),
        }
    }
}

/// How latent factors are extracted from a panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub method: Method,
    pub k: usize,
    pub depth: usize,
    /// Hidden-layer activation of the nonlinear autoencoders.
    pub activation: Activation,
    pub ssl: SslConfig,
    /// Group ids anchoring the grouped autoencoder's factors, in order.
    pub anchors: Vec<u8>,
    pub train: TrainConfig,
    /// Purge the contemporaneous effect of the observables from the factors.
    /// Defaults to on for PCA and off for the autoencoders.
    #[serde(default)]
    pub slow_adjust: Option<bool>,
}

impl FactorSpec {
    pub fn slow_adjust_enabled(&self) -> bool {
        self.slow_adjust.unwrap_or(self.method == Method::Pca)
    }
}

/// Fitted extraction model; PCA has nothing to store.
#[derive(Debug, Clone)]
pub enum Extractor {
    Pca,
    Network(Box<GsAeParams>),
}

/// Fits the extraction model on `panel` and returns it with the factors.
pub fn extract_factor_set(panel: &Panel, spec: &FactorSpec) -> Result<(FactorSet, Extractor)> {
    let (extractor, _) = fit_extractor(panel, spec)?;
    Ok((apply_extractor(panel, spec, &extractor)?, extractor))
}

/// Trains the network of an autoencoder method; PCA needs no fitting.
pub fn fit_extractor(panel: &Panel, spec: &FactorSpec) -> Result<(Extractor, Option<LossTrace>)> {
    match spec.method {
        Method::Pca => Ok((Extractor::Pca, None)),
        Method::PlainAe => {
            let (p, trace) = fit_plain(panel, spec.k, spec.depth, spec.activation, &spec.train)?;
            Ok((Extractor::Network(Box::new(p)), Some(trace)))
        }
        Method::GsAeLinear | Method::GsAeNonlinear => {
            if spec.anchors.len() != spec.k {
                return Err(PipelineError::Config(format!("{} anchor groups for K = {}", spec.anchors.len(), spec.k)));
            }
            anchor_names(panel, spec)?;
            let act = if spec.method == Method::GsAeLinear { Activation::Identity } else { spec.activation };
            let (p, trace, _) = fit_grouped(panel, &spec.anchors, spec.depth, act, &spec.ssl, &spec.train)?;
            Ok((Extractor::Network(Box::new(p)), Some(trace)))
        }
    }
}

/// Factors of `panel` under a fitted extractor, slow-adjusted when the spec
/// asks for it.
pub fn apply_extractor(panel: &Panel, spec: &FactorSpec, extractor: &Extractor) -> Result<FactorSet> {
    let mut factors = match (spec.method, extractor) {
        (Method::Pca, Extractor::Pca) => pca_factors(panel, spec.k)?.factors,
        (Method::PlainAe, Extractor::Network(p)) => extract_factors(p, panel, Method::PlainAe, None)?,
        (m @ (Method::GsAeLinear | Method::GsAeNonlinear), Extractor::Network(p)) => {
            extract_factors(p, panel, m, Some(anchor_names(panel, spec)?))?
        }
        (m, _) => return Err(PipelineError::Config(format!("stored extractor does not match method {m}"))),
    };
    if spec.slow_adjust_enabled() && factors.m() > 0 {
        factors.latent = slow_moving_adjust(&factors.latent, &slow_factors(panel, spec.k)?, &factors.observable)?;
    }
    Ok(factors)
}

/// Principal components of the slow-moving panel variables.
fn slow_factors(panel: &Panel, k: usize) -> Result<Matrix> {
    let idx = panel.slow_x_indices();
    if idx.is_empty() {
        return Err(PipelineError::Config("slow-moving adjustment needs at least one slow panel variable".into()));
    }
    let x = panel.columns(&idx);
    Ok(pca(&x, k.min(idx.len()).min(x.nrows()))?.scores)
}

fn anchor_names(panel: &Panel, spec: &FactorSpec) -> Result<Vec<String>> {
    let groups = panel.x_groups();
    spec.anchors
        .iter()
        .map(|g| {
            if groups.contains(g) {
                Ok(format!("G{g}"))
            } else {
                Err(PipelineError::Config(format!("anchor group {g} has no variables in the panel")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarConfig {
    pub spec: VarSpec,
    pub lags: usize,
    pub mcmc: McmcConfig,
    /// Sample `ξ` in the time-invariant VAR.
    #[serde(default)]
    pub sample_xi: bool,
    /// Multiplier on the TVP innovation-covariance prior scales.
    #[serde(default = "one")]
    pub q_scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Posterior draws of either VAR specification.
#[derive(Debug, Clone, PartialEq)]
pub enum VarFit {
    Tiv(TivDraws),
    Tvp(TvpChain),
}

impl VarFit {
    pub fn n(&self) -> usize {
        match self {
            VarFit::Tiv(d) => d.n,
            VarFit::Tvp(c) => c.n,
        }
    }

    pub fn lags(&self) -> usize {
        match self {
            VarFit::Tiv(d) => d.lags,
            VarFit::Tvp(c) => c.lags,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VarFit::Tiv(d) => d.len(),
            VarFit::Tvp(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_artifact(&self) -> Artifact {
        match self {
            VarFit::Tiv(d) => d.to_artifact(),
            VarFit::Tvp(c) => c.to_artifact(),
        }
    }

    pub fn from_artifact(a: &Artifact) -> Result<Self> {
        let kind: String = a.meta_field("kind")?;
        match kind.as_str() {
            "tiv_draws" => Ok(VarFit::Tiv(TivDraws::from_artifact(a)?)),
            "tvp_chain" => Ok(VarFit::Tvp(TvpChain::from_artifact(a)?)),
            other => Err(PipelineError::Config(format!("artifact kind '{other}' is not a VAR fit"))),
        }
    }
}

/// Estimates the VAR on `w` (latent factors first, then observables). Both
/// specifications retain `n_draws / thin` draws; the time-invariant chain
/// mixes quickly and keeps consecutive draws.
pub fn fit_var(w: &Matrix, cfg: &VarConfig, rng: &mut RngStream) -> Result<VarFit> {
    Ok(match cfg.spec {
        VarSpec::Tiv => {
            let prior = TivPrior { sample_xi: cfg.sample_xi, ..TivPrior::minnesota(w, cfg.lags)? };
            let d = gibbs_tiv(w, &prior, cfg.mcmc.n_burn, cfg.mcmc.n_draws / cfg.mcmc.thin.max(1), rng)?;
            VarFit::Tiv(d)
        }
        VarSpec::Tvp => {
            let prior = TvpPrior::minnesota(w, cfg.lags)?.scale_q(cfg.q_scale);
            VarFit::Tvp(tvp_mcmc(w, &prior, &cfg.mcmc, rng)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticConfig};

    fn spec(method: Method) -> FactorSpec {
        FactorSpec {
            method,
            k: 3,
            depth: 2,
            activation: Activation::Tanh,
            ssl: SslConfig::default(),
            anchors: vec![1, 2, 3],
            train: TrainConfig { epochs: 3, ..Default::default() },
            slow_adjust: None,
        }
    }

    #[test]
    fn every_method_yields_factors() {
        let (panel, _) =
            generate_synthetic(&SyntheticConfig { t: 80, m: 2, ..Default::default() }, &mut RngStream::new(1, 0))
                .unwrap();
        for m in Method::ALL {
            let (f, _) = extract_factor_set(&panel, &spec(m)).unwrap();
            assert_eq!((f.t(), f.k(), f.m()), (80, 3, 2));
            assert_eq!(f.method, m);
        }
    }

    #[test]
    fn anchors_must_match_k() {
        let (panel, _) =
            generate_synthetic(&SyntheticConfig { t: 60, ..Default::default() }, &mut RngStream::new(1, 0)).unwrap();
        let s = FactorSpec { anchors: vec![1, 2], ..spec(Method::GsAeNonlinear) };
        assert!(matches!(extract_factor_set(&panel, &s), Err(PipelineError::Config(_))));
        let s = FactorSpec { anchors: vec![1, 2, 42], ..spec(Method::GsAeLinear) };
        assert!(extract_factor_set(&panel, &s).is_err());
    }

    #[test]
    fn slow_adjustment_orthogonalizes_pca_factors() {
        let (panel, _) =
            generate_synthetic(&SyntheticConfig { t: 90, m: 2, ..Default::default() }, &mut RngStream::new(4, 0))
                .unwrap();
        let (f, _) = extract_factor_set(&panel, &spec(Method::Pca)).unwrap();
        let (raw, _) =
            extract_factor_set(&panel, &FactorSpec { slow_adjust: Some(false), ..spec(Method::Pca) }).unwrap();
        assert_ne!(f.latent, raw.latent);
        // zero coefficients on y once the slow factors are controlled for
        let slow = slow_factors(&panel, 3).unwrap();
        let mut design = Matrix::from_element(90, 6, 1.0);
        design.columns_mut(1, 3).copy_from(&slow);
        design.columns_mut(4, 2).copy_from(&f.observable);
        let beta = crate::numeric::ols(&design, &f.latent).unwrap();
        assert!(beta.rows(4, 2).amax() < 1e-10, "{}", beta.rows(4, 2));
    }

    #[test]
    fn var_spec_parsing() {
        assert_eq!("TVP".parse::<VarSpec>().unwrap(), VarSpec::Tvp);
        assert!("svar".parse::<VarSpec>().is_err());
    }
}

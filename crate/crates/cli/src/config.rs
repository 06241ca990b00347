//! Run configuration, read from TOML, and the hashes that tie stages together.

use crate::error::{CliError, Result};
use gsfavar::bvar::McmcConfig;
use gsfavar::factors::Method;
use gsfavar::forecast::PointRule;
use gsfavar::gsae::{Activation, AdamConfig, CvGrid, FoldScheme, SslConfig, TrainConfig};
use gsfavar::pipeline::{FactorSpec, VarConfig, VarSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root of every random stream; there is no wall-clock seeding.
    pub seed: u64,
    /// Output directory, relative to the artifact root unless absolute.
    #[serde(default = "default_output")]
    pub output: String,
    pub data: DataSection,
    #[serde(default)]
    pub factors: FactorSection,
    #[serde(default)]
    pub loadings: LoadingSection,
    #[serde(default)]
    pub var: VarSection,
    #[serde(default)]
    pub forecast: ForecastSection,
    #[serde(default)]
    pub irf: IrfSection,
    #[serde(default)]
    pub crossval: CrossvalSection,
}

fn default_output() -> String {
    "run".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub csv: Option<String>,
    pub manifest: Option<String>,
    /// Generate the panel instead of reading files.
    pub synthetic: Option<SyntheticSection>,
    #[serde(default)]
    pub forward_fill: bool,
    #[serde(default = "default_min_window")]
    pub min_window: usize,
    /// First and last quarter kept from the raw file, e.g. `"1965:Q1"`.
    pub start: Option<String>,
    pub end: Option<String>,
}

fn default_min_window() -> usize {
    gsfavar::data::MIN_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub t: usize,
    pub n: usize,
    pub c: usize,
    pub k: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

fn default_m() -> usize {
    3
}

fn default_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorSection {
    pub method: Method,
    pub k: usize,
    pub depth: usize,
    pub activation: String,
    pub lambda0: f64,
    pub lambda1: f64,
    pub hard_zero_anchors: bool,
    /// Anchor groups by manifest name or id, one per factor.
    pub anchors: Vec<String>,
    pub slow_adjust: Option<bool>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for FactorSection {
    fn default() -> Self {
        Self {
            method: Method::GsAeNonlinear,
            k: 3,
            depth: 3,
            activation: "tanh".into(),
            lambda0: 1000.0,
            lambda1: 1.0,
            hard_zero_anchors: false,
            anchors: Vec::new(),
            slow_adjust: None,
            epochs: 200,
            batch_size: 24,
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadingSection {
    pub n_burn: usize,
    pub n_draws: usize,
}

impl Default for LoadingSection {
    fn default() -> Self {
        Self { n_burn: 200, n_draws: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarSection {
    pub spec: VarSpec,
    pub lags: usize,
    pub n_burn: usize,
    pub n_draws: usize,
    pub thin: usize,
    pub sample_xi: bool,
    pub q_scale: f64,
    pub exact_vol_mh: bool,
}

impl Default for VarSection {
    fn default() -> Self {
        Self {
            spec: VarSpec::Tvp,
            lags: 2,
            n_burn: 1000,
            n_draws: 2500,
            thin: 5,
            sample_xi: false,
            q_scale: 1.0,
            exact_vol_mh: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    /// Quarters in the first estimation window; three quarters of the
    /// sample when unset.
    pub initial_window: Option<usize>,
    pub max_horizon: usize,
    pub point_rule: PointRule,
    /// Also run TIV-PCA and report relative metrics against it.
    pub benchmark: bool,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self { initial_window: None, max_horizon: 4, point_rule: PointRule::Mean, benchmark: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrfSection {
    /// Shocked observable; the last observable when unset.
    pub target: Option<String>,
    /// Shock size in basis points of the target's transformed units.
    pub bps: f64,
    pub horizons: usize,
    /// Dates at which TVP responses are reported; every quarter when empty.
    pub dates: Vec<String>,
    /// Panel variables whose responses are reported.
    pub panel_variables: Vec<String>,
    /// Map through the posterior-mean loadings instead of paired draws.
    pub mean_lambda: bool,
    /// Rescale panel responses by each variable's standard deviation.
    pub original_units: bool,
}

impl Default for IrfSection {
    fn default() -> Self {
        Self {
            target: None,
            bps: -100.0,
            horizons: 20,
            dates: Vec::new(),
            panel_variables: Vec::new(),
            mean_lambda: false,
            original_units: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossvalSection {
    pub folds: usize,
    pub scheme: FoldScheme,
    pub ks: Vec<usize>,
    pub depths: Vec<usize>,
    pub activations: Vec<String>,
    pub lambda0s: Vec<f64>,
    pub lambda1s: Vec<f64>,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for CrossvalSection {
    fn default() -> Self {
        let g = CvGrid::standard();
        Self {
            folds: 5,
            scheme: FoldScheme::Blocked,
            ks: g.ks,
            depths: g.depths,
            activations: vec!["tanh".into(), "leaky_relu".into(), "leaky_relu(1e-16)".into()],
            lambda0s: g.lambda0s,
            lambda1s: g.lambda1s,
            epochs: 100,
            batch_size: 24,
        }
    }
}

/// Pipeline stages in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Prepare,
    Crossval,
    Train,
    Factors,
    EstimateVar,
    Forecast,
    Irf,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Prepare => "prepare",
            Stage::Crossval => "crossval",
            Stage::Train => "train",
            Stage::Factors => "factors",
            Stage::EstimateVar => "estimate-var",
            Stage::Forecast => "forecast",
            Stage::Irf => "irf",
        }
    }

    /// Config sections a stage's outputs depend on, upstream ones included.
    fn sections(self) -> &'static [&'static str] {
        match self {
            Stage::Prepare => &["data"],
            Stage::Crossval => &["data", "crossval"],
            Stage::Train => &["data", "factors"],
            Stage::Factors => &["data", "factors", "loadings"],
            Stage::EstimateVar => &["data", "factors", "loadings", "var"],
            Stage::Forecast => &["data", "factors", "var", "forecast"],
            Stage::Irf => &["data", "factors", "loadings", "var", "irf"],
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Serializes with sorted keys and no whitespace.
pub fn canonical_json(v: &Value) -> String {
    serde_json::to_string(v).expect("json values always serialize")
}

/// A parsed configuration with its paths resolved and input files digested.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub cfg: RunConfig,
    /// Directory that relative data paths are resolved against.
    pub base: PathBuf,
    pub output_dir: PathBuf,
    /// SHA-256 of the data files, folded into the data section's hash.
    pub input_digests: Vec<(String, String)>,
}

impl Loaded {
    pub fn from_file(path: &Path, artifact_root: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = RunConfig::from_toml(&text).map_err(|e| e.context(&path.display().to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(cfg, base, artifact_root)
    }

    pub fn new(cfg: RunConfig, base: PathBuf, artifact_root: &Path) -> Result<Self> {
        cfg.validate()?;
        let out = PathBuf::from(&cfg.output);
        let output_dir = if out.is_absolute() { out } else { artifact_root.join(out) };
        let mut input_digests = Vec::new();
        for p in [&cfg.data.csv, &cfg.data.manifest].into_iter().flatten() {
            let full = base.join(p);
            if let Ok(bytes) = std::fs::read(&full) {
                input_digests.push((p.clone(), sha256_hex(&bytes)));
            }
        }
        Ok(Self { cfg, base, output_dir, input_digests })
    }

    pub fn data_path(&self, p: &str) -> PathBuf {
        self.base.join(p)
    }

    fn section(&self, name: &str) -> Value {
        let all = serde_json::to_value(&self.cfg).expect("config serializes");
        let mut v = all.get(name).cloned().unwrap_or(Value::Null);
        if name == "data" {
            v["input_digests"] = json!(self.input_digests);
        }
        v
    }

    /// Hash of the whole configuration plus the seed.
    pub fn config_hash(&self) -> String {
        let mut all = serde_json::to_value(&self.cfg).expect("config serializes");
        all["data"]["input_digests"] = json!(self.input_digests);
        if let Some(o) = all.as_object_mut() {
            o.remove("output");
        }
        sha256_hex(canonical_json(&all).as_bytes())
    }

    /// Hash of the sections a stage depends on plus the seed; a consumer
    /// recomputes it to detect stale upstream artifacts.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let mut v = serde_json::Map::new();
        v.insert("seed".into(), json!(self.cfg.seed));
        for s in stage.sections() {
            v.insert((*s).into(), self.section(s));
        }
        sha256_hex(canonical_json(&Value::Object(v)).as_bytes())
    }
}

fn parse_activation(s: &str) -> Result<Activation> {
    s.parse().map_err(|e: gsfavar::gsae::GsAeError| CliError::Config(e.to_string()))
}

impl RunConfig {
    /// Parses and validates a TOML run configuration.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        match (&d.synthetic, &d.csv, &d.manifest) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            _ => return Err(CliError::Config("data needs either `synthetic` or both `csv` and `manifest`".into())),
        }
        let f = &self.factors;
        if f.k == 0 {
            return Err(CliError::Config("factors.k must be positive".into()));
        }
        parse_activation(&f.activation)?;
        for a in &self.crossval.activations {
            parse_activation(a)?;
        }
        if matches!(f.method, Method::GsAeLinear | Method::GsAeNonlinear)
            && !f.anchors.is_empty()
            && f.anchors.len() != f.k
        {
            return Err(CliError::Config(format!("{} anchor groups for k = {}", f.anchors.len(), f.k)));
        }
        if self.var.lags == 0 || self.var.thin == 0 || self.var.n_draws < self.var.thin {
            return Err(CliError::Config("var needs lags >= 1, thin >= 1 and n_draws >= thin".into()));
        }
        if self.forecast.max_horizon == 0 {
            return Err(CliError::Config("forecast.max_horizon must be positive".into()));
        }
        Ok(())
    }

    /// Core factor specification with anchors already resolved to group ids.
    pub fn factor_spec(&self, anchors: Vec<u8>) -> Result<FactorSpec> {
        let f = &self.factors;
        Ok(FactorSpec {
            method: f.method,
            k: f.k,
            depth: f.depth,
            activation: parse_activation(&f.activation)?,
            ssl: SslConfig { lambda0: f.lambda0, lambda1: f.lambda1, hard_zero_anchors: f.hard_zero_anchors },
            anchors,
            train: TrainConfig {
                epochs: f.epochs,
                batch_size: f.batch_size,
                adam: AdamConfig { lr: f.lr, ..AdamConfig::default() },
                seed: self.seed,
                shuffle: true,
            },
            slow_adjust: f.slow_adjust,
        })
    }

    pub fn var_config(&self) -> VarConfig {
        let v = &self.var;
        VarConfig {
            spec: v.spec,
            lags: v.lags,
            mcmc: McmcConfig { n_burn: v.n_burn, n_draws: v.n_draws, thin: v.thin, exact_vol_mh: v.exact_vol_mh },
            sample_xi: v.sample_xi,
            q_scale: v.q_scale,
        }
    }

    pub fn cv_grid(&self) -> Result<CvGrid> {
        let c = &self.crossval;
        Ok(CvGrid {
            ks: c.ks.clone(),
            depths: c.depths.clone(),
            activations: c.activations.iter().map(|a| parse_activation(a)).collect::<Result<_>>()?,
            lambda0s: c.lambda0s.clone(),
            lambda1s: c.lambda1s.clone(),
        })
    }
}

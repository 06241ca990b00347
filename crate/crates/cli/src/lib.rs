//! Command-line orchestration of the two-step FAVAR pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod store;

use clap::{Args, Parser, Subcommand};
use config::{Loaded, RunConfig};
use error::{CliError, Result};
use gsfavar::data::SyntheticConfig;
use gsfavar::factors::Method;
use gsfavar::pipeline::VarSpec;
use std::path::{Path, PathBuf};

pub const ARTIFACT_ROOT_ENV: &str = "GSFAVAR_ARTIFACTS";

#[derive(Debug, Parser)]
#[command(name = "gsfavar", version, about = "Factor extraction, Bayesian VARs, forecasts and impulse responses")]
pub struct Cli {
    /// Root directory for run outputs.
    #[arg(long, env = ARTIFACT_ROOT_ENV, default_value = ".", global = true)]
    pub artifacts: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transform, align and standardize the input panel.
    Prepare(RunArgs),
    /// Cross-validate the autoencoder architecture and SSL rates.
    Crossval(RunArgs),
    /// Fit the factor extraction model.
    Train(RunArgs),
    /// Export factors, correlation tables and loading draws.
    Factors(RunArgs),
    /// Sample the VAR posterior on factors and observables.
    EstimateVar(RunArgs),
    /// Expanding-window forecast evaluation.
    Forecast(RunArgs),
    /// Impulse responses of the VAR block and the panel.
    Irf(RunArgs),
    /// prepare, train, factors, estimate-var, forecast and irf in order.
    All(RunArgs),
    /// Write a synthetic panel CSV and manifest.
    Synth(SynthArgs),
}

/// The run configuration plus command-line overrides of its fields.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, relative to the artifact root.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub var_spec: Option<VarSpec>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long)]
    pub lambda0: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Comma-separated anchor group names or ids.
    #[arg(long, value_delimiter = ',')]
    pub anchors: Option<Vec<String>>,
    #[arg(long)]
    pub lags: Option<usize>,
    #[arg(long)]
    pub n_burn: Option<usize>,
    #[arg(long)]
    pub n_draws: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving `panel.csv` and `manifest.toml`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 160)]
    pub t: usize,
    #[arg(long, default_value_t = 36)]
    pub n: usize,
    #[arg(long, default_value_t = 6)]
    pub c: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
}

impl RunArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($src:ident => $($dst:tt)+) => {
                if let Some(v) = &self.$src {
                    $($dst)+ = v.clone();
                }
            };
        }
        set!(seed => cfg.seed);
        set!(output => cfg.output);
        set!(method => cfg.factors.method);
        set!(var_spec => cfg.var.spec);
        set!(k => cfg.factors.k);
        set!(depth => cfg.factors.depth);
        set!(activation => cfg.factors.activation);
        set!(lambda0 => cfg.factors.lambda0);
        set!(lambda1 => cfg.factors.lambda1);
        set!(anchors => cfg.factors.anchors);
        set!(lags => cfg.var.lags);
        set!(n_burn => cfg.var.n_burn);
        set!(n_draws => cfg.var.n_draws);
        set!(thin => cfg.var.thin);
    }

    pub fn load(&self, artifact_root: &Path) -> Result<Loaded> {
        let raw = Loaded::from_file(&self.config, artifact_root)?;
        let mut cfg = raw.cfg;
        self.apply(&mut cfg);
        Loaded::new(cfg, raw.base, artifact_root)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let root = &cli.artifacts;
    match &cli.command {
        Command::Prepare(a) => commands::prepare(&a.load(root)?),
        Command::Crossval(a) => commands::crossval(&a.load(root)?),
        Command::Train(a) => commands::train(&a.load(root)?),
        Command::Factors(a) => commands::factors(&a.load(root)?),
        Command::EstimateVar(a) => commands::estimate_var(&a.load(root)?),
        Command::Forecast(a) => commands::forecast(&a.load(root)?),
        Command::Irf(a) => commands::irf(&a.load(root)?),
        Command::All(a) => {
            let l = a.load(root)?;
            commands::prepare(&l)?;
            commands::train(&l)?;
            commands::factors(&l)?;
            commands::estimate_var(&l)?;
            commands::forecast(&l)?;
            commands::irf(&l)
        }
        Command::Synth(s) => {
            if s.k == 0 || s.k > s.c || s.c > s.n {
                return Err(CliError::Config(format!("need 1 <= k <= c <= n (k={}, c={}, n={})", s.k, s.c, s.n)));
            }
            let cfg = SyntheticConfig { t: s.t, n: s.n, c: s.c, k: s.k, m: s.m, ..SyntheticConfig::default() };
            commands::synth(&s.out, &cfg, s.seed)
        }
    }
}

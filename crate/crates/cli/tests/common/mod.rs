#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_gsfavar");

pub const TOY_CONFIG: &str = r#"
seed = 11
output = "toy"

[data]
csv = "data/panel.csv"
manifest = "data/manifest.toml"

[factors]
method = "gs_ae_nonlinear"
k = 2
depth = 2
anchors = ["G1", "G2"]
epochs = 30
lr = 0.003

[loadings]
n_burn = 20
n_draws = 60

[var]
spec = "tvp"
lags = 1
n_burn = 40
n_draws = 60
thin = 1

[forecast]
initial_window = 112
max_horizon = 2

[irf]
horizons = 8
dates = ["1980:Q1", "1985:Q4"]
panel_variables = ["x000", "x010"]
original_units = true

[crossval]
folds = 2
ks = [2]
depths = [2]
activations = ["tanh"]
lambda0s = [1000.0]
lambda1s = [1.0]
epochs = 5
"#;

/// A scratch directory holding a synthetic panel and a run configuration.
pub struct Toy {
    pub dir: tempfile::TempDir,
}

impl Toy {
    pub fn new() -> Self {
        Self::with_config(TOY_CONFIG)
    }

    pub fn with_config(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let out = gsfavar(
            dir.path(),
            &["synth", "--out", "data", "--seed", "3", "--t", "120", "--n", "24", "--c", "4", "--k", "2", "--m", "2"],
        );
        assert!(out.status.success(), "synth failed: {}", String::from_utf8_lossy(&out.stderr));
        std::fs::write(dir.path().join("run.toml"), config).unwrap();
        Self { dir }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.path().join("artifacts").join("toy")
    }

    /// Runs `verb -c run.toml` plus extra flags with the artifact root set.
    pub fn run(&self, verb: &str, extra: &[&str]) -> Output {
        let mut args = vec![verb, "-c", "run.toml"];
        args.extend_from_slice(extra);
        gsfavar(self.path(), &args)
    }

    pub fn snapshot(&self) -> BTreeMap<String, Vec<u8>> {
        snapshot(&self.out_dir())
    }
}

pub fn gsfavar(cwd: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(cwd).env("GSFAVAR_ARTIFACTS", cwd.join("artifacts")).args(args).output().unwrap()
}

pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

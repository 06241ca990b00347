//! Output directory of one run: artifacts stamped with their provenance and a
//! `manifest.json` listing every file a stage wrote.

use crate::config::{sha256_hex, Loaded, Stage};
use crate::error::{CliError, Result};
use gsfavar::artifact::Artifact;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

pub struct Store<'a> {
    loaded: &'a Loaded,
    stage: Stage,
    outputs: BTreeMap<String, String>,
    upstream: BTreeMap<String, String>,
}

impl<'a> Store<'a> {
    pub fn open(loaded: &'a Loaded, stage: Stage) -> Result<Self> {
        let dir = &loaded.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { loaded, stage, outputs: BTreeMap::new(), upstream: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.loaded.output_dir
    }

    fn path(&self, file: &str) -> PathBuf {
        self.loaded.output_dir.join(file)
    }

    fn provenance(&self) -> Value {
        json!({
            "stage": self.stage.name(),
            "stage_hash": self.loaded.stage_hash(self.stage),
            "config_hash": self.loaded.config_hash(),
            "seed": self.loaded.cfg.seed,
            "upstream": self.upstream,
        })
    }

    pub fn write_bytes(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(file);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.insert(file.to_string(), sha256_hex(bytes));
        log::info!("wrote {}", path.display());
        Ok(())
    }

    /// Writes a CSV (or any text) produced into a buffer by `fill`.
    pub fn write_with<E: Into<CliError>>(
        &mut self,
        file: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), E>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(Into::into)?;
        self.write_bytes(file, &buf)
    }

    pub fn write_artifact(&mut self, file: &str, mut art: Artifact) -> Result<()> {
        art.meta["provenance"] = self.provenance();
        self.write_bytes(file, &art.encode())
    }

    /// JSON document with the provenance block added at the top level.
    pub fn write_json(&mut self, file: &str, mut v: Value) -> Result<()> {
        v["provenance"] = self.provenance();
        let mut text = serde_json::to_string_pretty(&v).expect("json values always serialize");
        text.push('\n');
        self.write_bytes(file, text.as_bytes())
    }

    /// Reads an artifact written by `stage`, refusing it when its recorded
    /// stage hash differs from the one the current configuration gives.
    pub fn load(&mut self, stage: Stage, file: &str) -> Result<Artifact> {
        let path = self.path(file);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CliError::MissingArtifact { path: path.display().to_string(), stage: stage.name() })
            }
            Err(e) => return Err(CliError::io(&path, e)),
        };
        let art = Artifact::decode(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let found = art.meta["provenance"]["stage_hash"].as_str().unwrap_or("").to_string();
        let expected = self.loaded.stage_hash(stage);
        if found != expected {
            return Err(CliError::StaleArtifact { path: path.display().to_string(), expected, found });
        }
        self.upstream.insert(file.to_string(), found);
        Ok(art)
    }

    /// Records this stage's outputs in the run manifest. Entries of other
    /// stages are kept.
    pub fn finish(self) -> Result<()> {
        let path = self.path(MANIFEST);
        let mut manifest: Value = match std::fs::read(&path) {
            Ok(b) => serde_json::from_slice(&b).unwrap_or_else(|_| json!({})),
            Err(_) => json!({}),
        };
        if !manifest.is_object() {
            manifest = json!({});
        }
        manifest["config_hash"] = json!(self.loaded.config_hash());
        manifest["seed"] = json!(self.loaded.cfg.seed);
        manifest["config"] = serde_json::to_value(&self.loaded.cfg).expect("config serializes");
        if !manifest["stages"].is_object() {
            manifest["stages"] = json!({});
        }
        manifest["stages"][self.stage.name()] = json!({
            "stage_hash": self.loaded.stage_hash(self.stage),
            "upstream": self.upstream,
            "outputs": self.outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("json values always serialize");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(())
    }
}

//! Panel loading, stationarity transforms, standardization and synthetic data.

mod csv_panel;
mod manifest;
mod panel;
mod quarter;
mod synthetic;
mod transform;

pub use csv_panel::{build_panel, load_panel, parse_raw_csv, LoadOptions, RawTable};
pub use manifest::{parse_manifest, GroupInfo, Manifest};
pub use panel::{GroupLayout, Panel};
pub use quarter::{ParseQuarterError, Quarter};
pub use synthetic::{generate_synthetic, DecoderKind, SyntheticConfig, SyntheticTruth};
pub use transform::{apply_transform, TransformCode};

use crate::numeric::NumericError;
use serde::{Deserialize, Serialize};

pub const MAX_GROUPS: u8 = 12;
pub const MIN_WINDOW: usize = 40;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("unknown transform code {0} (expected 1, 5, 7 or 50)")]
    UnknownCode(i64),
    #[error("transform needs positive values but observation {index} is {value}")]
    NonPositiveForLog { index: usize, value: f64 },
    #[error("variable '{0}' is listed in the manifest but absent from the data")]
    MissingVariable(String),
    #[error("line {line}, column '{column}': cannot parse '{value}' as a number")]
    NonNumericCell { line: u64, column: String, value: String },
    #[error("line {line}: {source}")]
    BadDate { line: u64, source: ParseQuarterError },
    #[error("only {len} usable quarters after alignment (need at least {min})")]
    WindowTooShort { len: usize, min: usize },
    #[error("variable '{variable}' has a missing value at {date} inside the common window")]
    MissingValue { variable: String, date: Quarter },
    #[error("variable '{0}' is constant over the window and cannot be standardized")]
    ConstantColumn(String),
    #[error("factor VAR is not stable (spectral radius {0})")]
    UnstableSpec(f64),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Artifact(#[from] crate::artifact::ArtifactError),
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speed {
    Slow,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ObservableY,
    PanelX,
}

/// One variable of the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    /// Category id in `1..=12`; observables may leave it unset.
    #[serde(default)]
    pub group: Option<u8>,
    pub tcode: TransformCode,
    pub speed: Speed,
    pub role: Role,
}

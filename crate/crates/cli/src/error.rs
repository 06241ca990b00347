use gsfavar::artifact::ArtifactError;
use gsfavar::bvar::BvarError;
use gsfavar::data::DataError;
use gsfavar::factors::FactorError;
use gsfavar::forecast::ForecastError;
use gsfavar::gsae::GsAeError;
use gsfavar::irf::IrfError;
use gsfavar::numeric::NumericError;
use gsfavar::pipeline::PipelineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("stale artifact {path}: built from stage hash {found}, current configuration gives {expected}")]
    StaleArtifact { path: String, expected: String, found: String },
    #[error("missing upstream artifact {path}; run `gsfavar {stage}` first")]
    MissingArtifact { path: String, stage: &'static str },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 2 configuration, 3 data or artifacts, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_)
            | CliError::StaleArtifact { .. }
            | CliError::MissingArtifact { .. }
            | CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// Prefixes the message with `ctx` (typically a file name).
    pub fn context(self, ctx: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{ctx}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{ctx}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{ctx}: {m}")),
            other => other,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Numeric(n) => n.into(),
            DataError::UnstableSpec(_) | DataError::InvalidSpec(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<NumericError> for CliError {
    fn from(e: NumericError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<ArtifactError> for CliError {
    fn from(e: ArtifactError) -> Self {
        CliError::Data(format!("artifact: {e}"))
    }
}

impl From<FactorError> for CliError {
    fn from(e: FactorError) -> Self {
        match e {
            FactorError::Artifact(a) => a.into(),
            FactorError::Csv(_) => CliError::Data(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<GsAeError> for CliError {
    fn from(e: GsAeError) -> Self {
        match e {
            GsAeError::InvalidConfig(_) | GsAeError::EmptyGrid => CliError::Config(e.to_string()),
            GsAeError::Data(d) => d.into(),
            GsAeError::Artifact(a) => a.into(),
            GsAeError::Factor(f) => f.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<BvarError> for CliError {
    fn from(e: BvarError) -> Self {
        match e {
            BvarError::InvalidPrior(_) => CliError::Config(e.to_string()),
            BvarError::TooShort { .. } => CliError::Data(e.to_string()),
            BvarError::Artifact(a) => a.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => CliError::Config(m),
            PipelineError::Data(d) => d.into(),
            PipelineError::Factor(f) => f.into(),
            PipelineError::GsAe(g) => g.into(),
            PipelineError::Bvar(b) => b.into(),
            PipelineError::Artifact(a) => a.into(),
            PipelineError::Numeric(n) => n.into(),
        }
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        match e {
            ForecastError::Config(_) => CliError::Config(e.to_string()),
            ForecastError::Pipeline(p) => (*p).into(),
            ForecastError::Data(d) => d.into(),
            ForecastError::Artifact(a) => a.into(),
            ForecastError::Csv(_) | ForecastError::OriginMismatch(_) | ForecastError::Shape(_) => {
                CliError::Data(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<IrfError> for CliError {
    fn from(e: IrfError) -> Self {
        match e {
            IrfError::BadOrdering { .. } | IrfError::DrawCountMismatch { .. } | IrfError::TimeOutOfRange { .. } => {
                CliError::Config(e.to_string())
            }
            IrfError::Numeric(n) => n.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

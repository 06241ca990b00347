use super::{DataError, Result};
use serde::{Deserialize, Serialize};

/// Stationarity transforms of the FRED-QD convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum TransformCode {
    /// 1: level.
    Level,
    /// 5: `Δ log x_t`.
    LogDiff,
    /// 7: `Δ(x_t / x_{t-1} - 1)`.
    PctChangeDiff,
    /// 50: `log x_t - log x_{t-4}`.
    YoyLogDiff,
}

impl TransformCode {
    /// Leading observations consumed by the transform.
    pub fn lags(self) -> usize {
        match self {
            TransformCode::Level => 0,
            TransformCode::LogDiff => 1,
            TransformCode::PctChangeDiff => 2,
            TransformCode::YoyLogDiff => 4,
        }
    }

    pub fn code(self) -> i64 {
        match self {
            TransformCode::Level => 1,
            TransformCode::LogDiff => 5,
            TransformCode::PctChangeDiff => 7,
            TransformCode::YoyLogDiff => 50,
        }
    }

    fn needs_positive(self) -> bool {
        matches!(self, TransformCode::LogDiff | TransformCode::YoyLogDiff)
    }
}

impl TryFrom<i64> for TransformCode {
    type Error = DataError;

    fn try_from(code: i64) -> Result<Self> {
        match code {
            1 => Ok(TransformCode::Level),
            5 => Ok(TransformCode::LogDiff),
            7 => Ok(TransformCode::PctChangeDiff),
            50 => Ok(TransformCode::YoyLogDiff),
            other => Err(DataError::UnknownCode(other)),
        }
    }
}

impl From<TransformCode> for i64 {
    fn from(c: TransformCode) -> i64 {
        c.code()
    }
}

impl std::fmt::Display for TransformCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Apply a transform to a raw series. The output drops the `code.lags()`
/// leading observations. Missing values (NaN) propagate to every output that
/// depends on them.
pub fn apply_transform(raw: &[f64], code: TransformCode) -> Result<Vec<f64>> {
    if code.needs_positive() {
        if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(DataError::NonPositiveForLog { index, value });
        }
    }
    let lags = code.lags();
    if raw.len() <= lags {
        return Ok(Vec::new());
    }
    let out = match code {
        TransformCode::Level => raw.to_vec(),
        TransformCode::LogDiff => raw.windows(2).map(|w| w[1].ln() - w[0].ln()).collect(),
        TransformCode::PctChangeDiff => raw.windows(3).map(|w| (w[2] / w[1] - 1.0) - (w[1] / w[0] - 1.0)).collect(),
        TransformCode::YoyLogDiff => raw.windows(5).map(|w| w[4].ln() - w[0].ln()).collect(),
    };
    Ok(out)
}

use super::{GsAeError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    /// `max(a x, x)` for a slope `a < 1`.
    LeakyRelu {
        slope: f64,
    },
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::LeakyRelu { slope } => {
                if z >= 0.0 {
                    z
                } else {
                    slope * z
                }
            }
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::LeakyRelu { slope } => {
                if z >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }

    pub fn is_injective(self) -> bool {
        match self {
            Activation::Identity | Activation::Tanh => true,
            Activation::LeakyRelu { slope } => slope > 0.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Identity => write!(f, "identity"),
            Activation::Tanh => write!(f, "tanh"),
            Activation::LeakyRelu { slope } => write!(f, "leaky_relu({slope:e})"),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = GsAeError;

    /// `identity`, `linear`, `tanh`, `relu`, `leaky_relu` (slope 0.01) or
    /// `leaky_relu(1e-16)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || GsAeError::InvalidConfig(format!("unknown activation '{s}'"));
        match s.as_str() {
            "identity" | "linear" => return Ok(Activation::Identity),
            "tanh" => return Ok(Activation::Tanh),
            "relu" => return Ok(Activation::LeakyRelu { slope: 0.0 }),
            "leaky_relu" => return Ok(Activation::LeakyRelu { slope: 0.01 }),
            _ => {}
        }
        let inner = s.strip_prefix("leaky_relu(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let slope: f64 = inner.parse().map_err(|_| bad())?;
        if !(0.0..1.0).contains(&slope) {
            return Err(bad());
        }
        Ok(Activation::LeakyRelu { slope })
    }
}

/// Layer sizes of the encoder and the shared part of the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub n: usize,
    pub k: usize,
    pub c: usize,
    /// `D^e_1..D^e_L`, ending in `K`.
    pub encoder_dims: Vec<usize>,
    /// Hidden widths of the shared decoder, `L - 1` entries. Each variable
    /// then has its own affine map from the last width to a scalar.
    pub decoder_dims: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    /// Evenly shrinking encoder `D_l = K + floor((N - K)(L - l) / L)` with a
    /// mirrored decoder.
    pub fn evenly_spaced(n: usize, k: usize, c: usize, depth: usize, activation: Activation) -> Result<Self> {
        if depth == 0 || k == 0 || k > n {
            return Err(GsAeError::InvalidConfig(format!("need L >= 1 and 1 <= K <= N (L={depth}, K={k}, N={n})")));
        }
        let encoder_dims: Vec<usize> = (1..=depth).map(|l| k + (n - k) * (depth - l) / depth).collect();
        let decoder_dims = encoder_dims[..depth - 1].iter().rev().copied().collect();
        let arch = Self { n, k, c, encoder_dims, decoder_dims, activation };
        arch.validate()?;
        Ok(arch)
    }

    pub fn depth(&self) -> usize {
        self.encoder_dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder_dims.last() != Some(&self.k) {
            return Err(GsAeError::InvalidConfig("last encoder width must equal K".into()));
        }
        if self.decoder_dims.len() + 1 != self.encoder_dims.len() {
            return Err(GsAeError::InvalidConfig("decoder needs L - 1 shared layers".into()));
        }
        if self.encoder_dims.iter().chain(&self.decoder_dims).any(|d| *d == 0) || self.n == 0 || self.c == 0 {
            return Err(GsAeError::InvalidConfig("zero-width layer".into()));
        }
        Ok(())
    }

    /// Width feeding the per-variable heads.
    pub fn head_input(&self) -> usize {
        self.decoder_dims.last().copied().unwrap_or(self.k)
    }
}

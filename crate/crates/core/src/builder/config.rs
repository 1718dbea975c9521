use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BuildError;
use crate::trajectory::{DeviationWeights, Quantization, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Variant {
    /// Perfect information, nondeterministic environment branches.
    A,
    /// Perfect information, estimated probabilities.
    #[default]
    B,
    /// Quantized sensor observations.
    C,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::A => "A",
            Variant::B => "B",
            Variant::C => "C",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            "C" | "c" => Ok(Variant::C),
            other => Err(format!("unknown variant {other:?} (A|B|C)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    /// Time precision in seconds.
    pub k: f64,
    pub variant: Variant,
    /// Mission horizon in seconds; defaults to the shortest input, floored
    /// to a multiple of `k`.
    pub horizon: Option<f64>,
    pub weights: DeviationWeights,
    pub thresholds: Thresholds,
    pub quantization: Quantization,
    pub always_allow_disengage: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            variant: Variant::B,
            horizon: None,
            weights: DeviationWeights::default(),
            thresholds: Thresholds::default(),
            quantization: Quantization::default(),
            always_allow_disengage: false,
        }
    }
}

impl BuildConfig {
    pub fn from_json(text: &str) -> Result<Self, BuildError> {
        serde_json::from_str(text).map_err(|e| BuildError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(BuildError::Config(format!(
                "k must be positive, got {}",
                self.k
            )));
        }
        if let Some(h) = self.horizon {
            let steps = h / self.k;
            if !(h > 0.0) || (steps - steps.round()).abs() > 1e-6 {
                return Err(BuildError::Config(format!(
                    "horizon {h} is not a positive multiple of k = {}",
                    self.k
                )));
            }
        }
        self.weights.validate()?;
        self.thresholds.validate()?;
        self.quantization.validate()?;
        Ok(())
    }
}

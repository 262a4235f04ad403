//! Scenario files: one structured-text (TOML) document per problem instance.
//!
//! Load -> save -> load round-trips to an identical model; floats are written
//! with shortest round-trip precision.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AdversaryCost, BenefitFunction, MarketModel, Tolerances, DEFAULT_S_MAX,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
}

fn default_s_max() -> f64 {
    DEFAULT_S_MAX
}

fn default_seed() -> u64 {
    0
}

/// On-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    pub q: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub phi: f64,
    pub grid_m: usize,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    pub cost: AdversaryCost,
    #[serde(rename = "benefit")]
    pub benefits: Vec<BenefitFunction>,
}

impl Scenario {
    pub fn from_model(m: &MarketModel, rng_seed: u64) -> Self {
        Scenario {
            n: m.n,
            q: m.q.clone(),
            rho: m.rho,
            gamma: m.gamma,
            phi: m.phi,
            grid_m: m.grid_m,
            s_max: m.s_max,
            rng_seed,
            tolerances: Some(m.tol),
            cost: m.cost.clone(),
            benefits: m.benefits.clone(),
        }
    }

    pub fn to_model(&self) -> MarketModel {
        MarketModel {
            n: self.n,
            q: self.q.clone(),
            rho: self.rho,
            gamma: self.gamma,
            phi: self.phi,
            benefits: self.benefits.clone(),
            cost: self.cost.clone(),
            grid_m: self.grid_m,
            s_max: self.s_max,
            tol: self.tolerances.unwrap_or_default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(toml::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let path = path.as_ref();
        let text = toml::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{GraphConfig, ModelConfig};
use super::model::Network;
use super::params::NetworkParameters;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "equiflow-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Self-describing parameter file. Floats are written with shortest
/// round-trip formatting, so loading restores every bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    pub graph: GraphConfig,
    pub params: NetworkParameters,
}

impl Checkpoint {
    pub fn new(model: ModelConfig, graph: GraphConfig, params: NetworkParameters) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model,
            graph,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", c.format)));
        }
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", c.version)));
        }
        let net = Network::new(c.model.clone())?;
        net.check_params(&c.params)
            .map_err(|_| Error::Checkpoint("parameter registry does not match the model".into()))?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

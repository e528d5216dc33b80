use serde::{Deserialize, Serialize};

use crate::so3::IrrepsLayout;
use crate::{Error, Result};

/// Neighbourhood size and pooling ratios of the graph hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub k: usize,
    pub ratios: (f64, f64),
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            k: 13,
            ratios: (0.25, 0.25),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegnnConfig {
    /// Leading 0e entries followed by higher degrees, e.g. `16x0e+8x1o+4x2e`.
    pub hidden: IrrepsLayout,
    /// Highest spherical-harmonic degree of edge and vertex attributes.
    pub attr_lmax: u32,
    pub layers_per_scale: usize,
    pub normalize: bool,
    /// Positions and descriptors are divided by this length (mm).
    pub length_scale: f64,
    /// Network outputs are multiplied by this speed (mm/s).
    pub velocity_scale: f64,
}

impl Default for SegnnConfig {
    fn default() -> Self {
        Self {
            hidden: "16x0e+8x1o+4x2e".parse().expect("valid layout"),
            attr_lmax: 2,
            layers_per_scale: 2,
            normalize: true,
            length_scale: 10.0,
            velocity_scale: 100.0,
        }
    }
}

/// Plain message-passing network on Cartesian coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub width: usize,
    pub layers_per_scale: usize,
    pub normalize: bool,
    /// Also feed raw vertex positions, which makes the output depend on
    /// translations.
    pub absolute_positions: bool,
    pub length_scale: f64,
    pub velocity_scale: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            width: 32,
            layers_per_scale: 2,
            normalize: true,
            absolute_positions: false,
            length_scale: 10.0,
            velocity_scale: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Segnn(SegnnConfig),
    Baseline(BaselineConfig),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Segnn(_) => "segnn",
            ModelConfig::Baseline(_) => "baseline",
        }
    }

    pub fn length_scale(&self) -> f64 {
        match self {
            ModelConfig::Segnn(c) => c.length_scale,
            ModelConfig::Baseline(c) => c.length_scale,
        }
    }

    pub fn velocity_scale(&self) -> f64 {
        match self {
            ModelConfig::Segnn(c) => c.velocity_scale,
            ModelConfig::Baseline(c) => c.velocity_scale,
        }
    }

    pub fn layers_per_scale(&self) -> usize {
        match self {
            ModelConfig::Segnn(c) => c.layers_per_scale,
            ModelConfig::Baseline(c) => c.layers_per_scale,
        }
    }

    pub fn normalize(&self) -> bool {
        match self {
            ModelConfig::Segnn(c) => c.normalize,
            ModelConfig::Baseline(c) => c.normalize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (ls, vs, layers) = (self.length_scale(), self.velocity_scale(), self.layers_per_scale());
        if !(ls > 0.0 && ls.is_finite() && vs > 0.0 && vs.is_finite()) {
            return Err(Error::Precondition("length and velocity scales must be positive".into()));
        }
        if layers == 0 {
            return Err(Error::Precondition("layers_per_scale must be positive".into()));
        }
        match self {
            ModelConfig::Segnn(c) => {
                if !c.hidden.entries().iter().any(|e| e.irrep.is_scalar()) {
                    return Err(Error::Precondition(format!(
                        "hidden layout `{}` needs a 0e entry for the gates",
                        c.hidden
                    )));
                }
                crate::so3::IrrepsLayout::spherical_harmonics(c.attr_lmax)?;
            }
            ModelConfig::Baseline(c) => {
                if c.width == 0 {
                    return Err(Error::Precondition("baseline width must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

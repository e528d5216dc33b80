use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Named slice of the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Ordered, contiguous registry of parameter slices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamRegistry {
    slots: Vec<ParamSlot>,
}

impl ParamRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a slot and returns its offset.
    pub fn register(&mut self, name: impl Into<String>, len: usize) -> usize {
        let offset = self.total();
        self.slots.push(ParamSlot {
            name: name.into(),
            offset,
            len,
        });
        offset
    }

    pub fn total(&self) -> usize {
        self.slots.last().map_or(0, |s| s.offset + s.len)
    }

    pub fn slots(&self) -> &[ParamSlot] {
        &self.slots
    }

    pub fn get(&self, name: &str) -> Option<&ParamSlot> {
        self.slots.iter().find(|s| s.name == name)
    }

    /// Checks that slots tile `0..total` without gaps or overlaps.
    pub fn validate(&self) -> Result<()> {
        let mut next = 0;
        for s in &self.slots {
            if s.offset != next {
                return Err(Error::Checkpoint(format!(
                    "parameter slot `{}` starts at {} instead of {next}",
                    s.name, s.offset
                )));
            }
            next += s.len;
        }
        Ok(())
    }
}

/// Flat trainable vector with its registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParameters {
    pub registry: ParamRegistry,
    pub values: Vec<f64>,
}

impl NetworkParameters {
    pub fn new(registry: ParamRegistry, values: Vec<f64>) -> Result<Self> {
        registry.validate()?;
        if values.len() != registry.total() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameter values for a registry of {}",
                values.len(),
                registry.total()
            )));
        }
        Ok(Self { registry, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice(&self, name: &str) -> Option<&[f64]> {
        self.registry
            .get(name)
            .map(|s| &self.values[s.offset..s.offset + s.len])
    }
}

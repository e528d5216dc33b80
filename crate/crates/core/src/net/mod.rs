//! Steerable building blocks, the equivariant network and the baseline.

mod checkpoint;
mod config;
mod gate;
mod graph;
mod model;
mod norm;
mod params;
pub mod pool;
mod tensor_product;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{BaselineConfig, GraphConfig, ModelConfig, SegnnConfig};
pub use gate::{gated_nonlinearity, sigmoid, silu, Gate};
pub use graph::{GraphInputs, LevelInputs};
pub use model::Network;
pub use norm::{GraphNorm, NORM_EPS};
pub use params::{NetworkParameters, ParamRegistry, ParamSlot};
pub use pool::{pool_mean, unpool_copy};
pub use tensor_product::{tensor_product, TensorProduct, TensorProductMap, TpPath};

use crate::descriptors::DescriptorMatrix;
use crate::field::VelocityField;
use crate::mesh::{GraphHierarchy, TetMesh};
use crate::Result;

/// Equivariant network prediction for one mesh.
pub fn segnn_forward(
    mesh: &TetMesh,
    hierarchy: &GraphHierarchy,
    descriptors: &DescriptorMatrix,
    params: &NetworkParameters,
    config: &SegnnConfig,
) -> Result<VelocityField> {
    forward(ModelConfig::Segnn(config.clone()), mesh, hierarchy, descriptors, params)
}

/// Baseline prediction for one mesh.
pub fn baseline_forward(
    mesh: &TetMesh,
    hierarchy: &GraphHierarchy,
    descriptors: &DescriptorMatrix,
    params: &NetworkParameters,
    config: &BaselineConfig,
) -> Result<VelocityField> {
    forward(ModelConfig::Baseline(config.clone()), mesh, hierarchy, descriptors, params)
}

fn forward(
    config: ModelConfig,
    mesh: &TetMesh,
    hierarchy: &GraphHierarchy,
    descriptors: &DescriptorMatrix,
    params: &NetworkParameters,
) -> Result<VelocityField> {
    let inputs = GraphInputs::prepare(&config, mesh, hierarchy, descriptors)?;
    let net = Network::new(config)?;
    net.check_params(params)?;
    net.forward(&inputs, &params.values)
}

//! Rotation-equivariant graph networks that estimate steady velocity fields on
//! tetrahedral vessel meshes.
//!
//! The crate is organised bottom-up:
//!
//! - [`so3`]: irreducible representations of O(3), real spherical harmonics,
//!   Wigner-D matrices and Clebsch-Gordan coefficients.
//! - [`mesh`]: tetrahedral meshes, VTK legacy I/O, k-NN graphs, farthest point
//!   sampling and the three-level pooling hierarchy.
//! - [`descriptors`]: per-vertex nearest-point difference vectors to the inlet,
//!   wall and outlets.
//! - [`net`]: steerable tensor products, gates, per-graph normalization,
//!   pooling, the equivariant network and a non-equivariant baseline.
//! - [`autodiff`] and [`train`]: a tape of batched primitives with hand-written
//!   vector-Jacobian products, L1 loss, Adam and the training loop.
//! - [`metrics`]: NMAE, approximation error and mean cosine similarity.
//! - [`synth`]: parametric tube meshes with an analytic laminar flow oracle.

pub mod autodiff;
pub mod descriptors;
pub mod error;
pub mod field;
pub mod geom;
pub mod mesh;
pub mod metrics;
pub mod net;
pub mod so3;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use field::VelocityField;

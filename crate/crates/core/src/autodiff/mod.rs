//! Reverse-mode differentiation over the network's batched primitives.
//!
//! A [`Tape`] records each operation together with its output value; the
//! backward pass walks the records in reverse and applies hand-written
//! vector-Jacobian products. Trainable parameters live in one flat slice that
//! operations address by offset.

mod rows;
mod tape;

pub use rows::Rows;
pub use tape::{Gradients, NodeId, Tape};

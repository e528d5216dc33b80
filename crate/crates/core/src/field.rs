//! Per-vertex velocity vectors.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::so3::Rotation;

/// One Cartesian 3-vector per mesh vertex (mm/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityField {
    pub rows: Vec<Vec3>,
}

impl VelocityField {
    pub fn new(rows: Vec<Vec3>) -> Self {
        Self { rows }
    }

    pub fn zeros(n: usize) -> Self {
        Self { rows: vec![[0.0; 3]; n] }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rotated(&self, rotation: &Rotation) -> Self {
        Self {
            rows: self.rows.iter().map(|v| rotation.apply(*v)).collect(),
        }
    }

    /// Row-major flattening, three components per vertex.
    pub fn to_flat(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|v| v.iter().copied()).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        assert_eq!(flat.len() % 3, 0, "flat velocity buffer must hold 3-vectors");
        Self {
            rows: flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        }
    }

    /// Frobenius norm over all components.
    pub fn frobenius(&self) -> f64 {
        self.rows
            .iter()
            .map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            .sum::<f64>()
            .sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len());
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let d = crate::geom::sub(*a, *b);
                crate::geom::norm2(d)
            })
            .sum::<f64>()
            .sqrt()
    }
}

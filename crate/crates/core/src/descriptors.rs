//! Per-vertex geometry descriptors: difference vectors from each vertex to its
//! nearest inlet, wall and outlet vertex.
//!
//! Built only from position differences, so a uniform translation leaves the
//! rows unchanged and a rotation `R` maps each 3-vector sub-block `d` to `R d`.
//! The argmin is exact and resolves ties to the lowest vertex index.

use serde::{Deserialize, Serialize};

use crate::geom::{sub, Vec3};
use crate::mesh::{nearest_index, Role, TetMesh};
use crate::{Error, Result};

/// Sub-block order inside each descriptor row.
pub const DESCRIPTOR_ROLES: [Role; 3] = [Role::Inlet, Role::Wall, Role::Outlet];

/// `n × 9` matrix; row `i` is `(κ_inlet(p_i) - p_i, κ_wall(p_i) - p_i, κ_outlet(p_i) - p_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorMatrix {
    pub rows: Vec<[f64; 9]>,
}

impl DescriptorMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sub-block `block` (0 inlet, 1 wall, 2 outlet) of row `i`.
    pub fn block(&self, i: usize, block: usize) -> Vec3 {
        let r = &self.rows[i];
        [r[3 * block], r[3 * block + 1], r[3 * block + 2]]
    }

    /// All rows of one sub-block, e.g. for export as a VTK vector array.
    pub fn column_block(&self, block: usize) -> Vec<Vec3> {
        (0..self.len()).map(|i| self.block(i, block)).collect()
    }
}

/// The member of `set` nearest to `p`, lowest index on ties.
pub fn nearest_in_set(p: Vec3, set: &[Vec3]) -> Result<Vec3> {
    nearest_index(p, set)
        .map(|j| set[j])
        .ok_or_else(|| Error::Precondition("nearest point in an empty set".into()))
}

pub fn compute_descriptors(mesh: &TetMesh) -> Result<DescriptorMatrix> {
    let mut sets = Vec::with_capacity(3);
    for role in DESCRIPTOR_ROLES {
        let pts = mesh.role_points(role);
        if pts.is_empty() {
            return Err(Error::MissingRole(role));
        }
        sets.push(pts);
    }
    let rows = mesh
        .positions()
        .iter()
        .map(|&p| {
            let mut row = [0.0; 9];
            for (b, set) in sets.iter().enumerate() {
                let q = nearest_in_set(p, set).expect("non-empty");
                row[3 * b..3 * b + 3].copy_from_slice(&sub(q, p));
            }
            row
        })
        .collect();
    Ok(DescriptorMatrix { rows })
}

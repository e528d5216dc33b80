//! Tetrahedral meshes and the graphs built on them.

mod fps;
mod hierarchy;
mod knn;
mod vtk;

pub use fps::{covering_radius, farthest_point_sampling};
pub use hierarchy::{build_hierarchy, build_hierarchy_from_positions, GraphHierarchy, Level};
pub use knn::{knn_graph, knn_graph_with, nearest_index, EdgeList, SearchStrategy, BRUTE_FORCE_LIMIT};
pub use vtk::{load_mesh, load_mesh_with_vectors, save_mesh, save_mesh_with_vectors, VtkContent};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::{tet_volume, Vec3};
use crate::so3::RigidMotion;
use crate::{Error, Result};

/// Boundary role of a vertex, with its integer code in mesh files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Inlet = 0,
    Wall = 1,
    Outlet = 2,
    Interior = 3,
}

impl Role {
    pub fn code(self) -> i64 {
        self as i64
    }

    pub fn from_code(code: i64) -> Option<Role> {
        match code {
            0 => Some(Role::Inlet),
            1 => Some(Role::Wall),
            2 => Some(Role::Outlet),
            3 => Some(Role::Interior),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Inlet => "inlet",
            Role::Wall => "wall",
            Role::Outlet => "outlet",
            Role::Interior => "interior",
        })
    }
}

/// Vertices (mm), tetrahedra and per-vertex boundary roles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TetMesh {
    positions: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    roles: Vec<Role>,
}

impl TetMesh {
    /// Validates finiteness, index ranges and distinct tet corners.
    pub fn new(positions: Vec<Vec3>, tets: Vec<[usize; 4]>, roles: Vec<Role>) -> Result<Self> {
        let n = positions.len();
        if roles.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} roles for {n} vertices",
                roles.len()
            )));
        }
        if let Some(i) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Precondition(format!("vertex {i} has a non-finite coordinate")));
        }
        for (t, tet) in tets.iter().enumerate() {
            if tet.iter().any(|&v| v >= n) {
                return Err(Error::Precondition(format!(
                    "tet {t} references a vertex outside [0, {n})"
                )));
            }
            for a in 0..4 {
                for b in a + 1..4 {
                    if tet[a] == tet[b] {
                        return Err(Error::Precondition(format!(
                            "tet {t} repeats vertex {}",
                            tet[a]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            positions,
            tets,
            roles,
        })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Positions of every vertex carrying `role`, in index order.
    pub fn role_points(&self, role: Role) -> Vec<Vec3> {
        self.positions
            .iter()
            .zip(&self.roles)
            .filter(|(_, r)| **r == role)
            .map(|(p, _)| *p)
            .collect()
    }

    pub fn count_role(&self, role: Role) -> usize {
        self.roles.iter().filter(|r| **r == role).count()
    }

    pub fn signed_volume(&self, tet: usize) -> f64 {
        let [a, b, c, d] = self.tets[tet];
        let p = &self.positions;
        tet_volume(p[a], p[b], p[c], p[d])
    }

    /// Copy with every position mapped through `motion`.
    pub fn transformed(&self, motion: &RigidMotion) -> TetMesh {
        TetMesh {
            positions: self.positions.iter().map(|p| motion.apply(*p)).collect(),
            tets: self.tets.clone(),
            roles: self.roles.clone(),
        }
    }

    /// Largest distance between any two vertices.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                best = best.max(crate::geom::dist2(*a, *b));
            }
        }
        best.sqrt()
    }
}

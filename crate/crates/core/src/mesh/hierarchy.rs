//! Three nested vertex levels `V0 ⊃ V1 ⊃ V2` with per-level k-NN graphs and
//! nearest-point pooling assignments.

use serde::{Deserialize, Serialize};

use super::{farthest_point_sampling, knn_graph, nearest_index, EdgeList, TetMesh};
use crate::geom::Vec3;
use crate::{Error, Result};

/// One level of the hierarchy. Vertex lists are sorted ascending, so local
/// indices preserve the global index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    /// Global mesh indices of this level's vertices.
    pub vertices: Vec<usize>,
    /// Edges in local indices.
    pub edges: EdgeList,
    /// Local index in the next level for every vertex; `None` at the coarsest.
    pub pool: Option<Vec<usize>>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphHierarchy {
    pub levels: Vec<Level>,
}

impl GraphHierarchy {
    /// Checks nesting and pool-target consistency.
    pub fn validate(&self, positions: &[Vec3]) -> Result<()> {
        for w in self.levels.windows(2) {
            let (fine, coarse) = (&w[0], &w[1]);
            if !coarse.vertices.iter().all(|v| fine.vertices.binary_search(v).is_ok()) {
                return Err(Error::Precondition("coarse level is not a subset of the finer level".into()));
            }
            let pool = fine
                .pool
                .as_ref()
                .ok_or_else(|| Error::Precondition("missing pool assignment".into()))?;
            if pool.len() != fine.len() || pool.iter().any(|&t| t >= coarse.len()) {
                return Err(Error::Precondition("pool assignment out of range".into()));
            }
            let coarse_pos: Vec<Vec3> = coarse.vertices.iter().map(|&v| positions[v]).collect();
            for (i, &t) in pool.iter().enumerate() {
                if nearest_index(positions[fine.vertices[i]], &coarse_pos) != Some(t) {
                    return Err(Error::Precondition(format!("pool target of local vertex {i} is not its nearest")));
                }
            }
        }
        Ok(())
    }
}

/// Level size `⌈n · ratio⌉`, guarded against representation error in the product.
fn level_size(n: usize, ratio: f64) -> usize {
    ((n as f64 * ratio) - 1e-9).ceil().max(1.0) as usize
}

pub fn build_hierarchy(mesh: &TetMesh, k: usize, ratios: (f64, f64)) -> Result<GraphHierarchy> {
    build_hierarchy_from_positions(mesh.positions(), k, ratios)
}

pub fn build_hierarchy_from_positions(positions: &[Vec3], k: usize, ratios: (f64, f64)) -> Result<GraphHierarchy> {
    let (r1, r2) = ratios;
    for r in [r1, r2] {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Precondition(format!("pooling ratio {r} outside (0, 1]")));
        }
    }
    let n = positions.len();
    let n1 = level_size(n, r1);
    let n2 = level_size(n, r1 * r2);
    if n2 < k + 1 {
        return Err(Error::InsufficientVertices { n: n2, k });
    }

    let v0: Vec<usize> = (0..n).collect();
    let mut v1 = farthest_point_sampling(positions, n1, 0)?;
    v1.sort_unstable();
    let pos1: Vec<Vec3> = v1.iter().map(|&v| positions[v]).collect();
    let mut v2: Vec<usize> = farthest_point_sampling(&pos1, n2, 0)?
        .into_iter()
        .map(|local| v1[local])
        .collect();
    v2.sort_unstable();

    let vertex_sets = [v0, v1, v2];
    let mut levels = Vec::with_capacity(3);
    for (l, verts) in vertex_sets.iter().enumerate() {
        let pos: Vec<Vec3> = verts.iter().map(|&v| positions[v]).collect();
        let edges = knn_graph(&pos, k)?;
        let pool = if l + 1 < vertex_sets.len() {
            let next: Vec<Vec3> = vertex_sets[l + 1].iter().map(|&v| positions[v]).collect();
            Some(
                pos.iter()
                    .map(|p| nearest_index(*p, &next).expect("non-empty level"))
                    .collect(),
            )
        } else {
            None
        };
        levels.push(Level {
            vertices: verts.clone(),
            edges,
            pool,
        });
    }
    Ok(GraphHierarchy { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..8.0)])
            .collect()
    }

    #[test]
    fn ceiling_level_sizes() {
        let p = cloud(1000, 1);
        let h = build_hierarchy_from_positions(&p, 13, (0.25, 0.25)).unwrap();
        let sizes: Vec<usize> = h.levels.iter().map(Level::len).collect();
        assert_eq!(sizes, vec![1000, 250, 63]);
        h.validate(&p).unwrap();
        assert_eq!(level_size(1000, 0.3), 300);
    }

    #[test]
    fn unit_ratios_give_identical_levels() {
        let p = cloud(40, 2);
        let h = build_hierarchy_from_positions(&p, 5, (1.0, 1.0)).unwrap();
        assert_eq!(h.levels[0].vertices, h.levels[1].vertices);
        assert_eq!(h.levels[1].vertices, h.levels[2].vertices);
        let ident: Vec<usize> = (0..40).collect();
        assert_eq!(h.levels[0].pool.as_ref().unwrap(), &ident);
        assert_eq!(h.levels[1].pool.as_ref().unwrap(), &ident);
        assert!(h.levels[2].pool.is_none());
    }

    #[test]
    fn surviving_vertices_pool_to_themselves() {
        let p = cloud(200, 3);
        let h = build_hierarchy_from_positions(&p, 6, (0.5, 0.5)).unwrap();
        let (l1, l2) = (&h.levels[1], &h.levels[2]);
        for (i, v) in l1.vertices.iter().enumerate() {
            if let Ok(j) = l2.vertices.binary_search(v) {
                assert_eq!(l1.pool.as_ref().unwrap()[i], j);
            }
        }
    }

    #[test]
    fn coarsest_too_small() {
        let p = cloud(100, 4);
        assert!(matches!(
            build_hierarchy_from_positions(&p, 13, (0.25, 0.25)),
            Err(Error::InsufficientVertices { .. })
        ));
    }
}

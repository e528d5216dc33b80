//! Exact k-nearest-neighbour graphs.
//!
//! Neighbours are ordered by `(squared distance, index)`, which makes the tie
//! break "lowest index wins" and the output fully deterministic. Both search
//! paths compute squared distances with the same expression, so they agree
//! bit for bit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geom::{dist2, Vec3};
use crate::{Error, Result};

/// Above this many points [`knn_graph`] switches to the uniform-grid search.
pub const BRUTE_FORCE_LIMIT: usize = 50_000;

/// Directed edges `(source, target)`; messages flow from source to target.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub edges: Vec<(usize, usize)>,
}

impl EdgeList {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn sources(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.0).collect()
    }

    pub fn targets(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.1).collect()
    }

    pub fn in_degrees(&self, n: usize) -> Vec<usize> {
        let mut deg = vec![0; n];
        for &(_, t) in &self.edges {
            deg[t] += 1;
        }
        deg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Brute force up to [`BRUTE_FORCE_LIMIT`] points, grid above.
    Auto,
    BruteForce,
    Grid,
}

/// For every vertex `i`, the `k` edges `j → i` from its nearest neighbours.
pub fn knn_graph(positions: &[Vec3], k: usize) -> Result<EdgeList> {
    knn_graph_with(positions, k, SearchStrategy::Auto)
}

pub fn knn_graph_with(positions: &[Vec3], k: usize, strategy: SearchStrategy) -> Result<EdgeList> {
    let n = positions.len();
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    if n <= k {
        return Err(Error::InsufficientVertices { n, k });
    }
    let use_grid = match strategy {
        SearchStrategy::Auto => n > BRUTE_FORCE_LIMIT,
        SearchStrategy::BruteForce => false,
        SearchStrategy::Grid => true,
    };
    let mut edges = Vec::with_capacity(n * k);
    if use_grid {
        let grid = Grid::new(positions, k);
        let mut scratch = Vec::new();
        for i in 0..n {
            for j in grid.query(positions, i, k, &mut scratch) {
                edges.push((j, i));
            }
        }
    } else {
        let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
        for i in 0..n {
            cand.clear();
            cand.extend(
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (dist2(positions[i], positions[j]), j)),
            );
            select_smallest(&mut cand, k);
            edges.extend(cand[..k].iter().map(|&(_, j)| (j, i)));
        }
    }
    Ok(EdgeList { edges })
}

fn order(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Moves the `k` smallest candidates to the front, sorted.
fn select_smallest(cand: &mut [(f64, usize)], k: usize) {
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, order);
    }
    cand[..k].sort_unstable_by(order);
}

/// Index of the member of `set` closest to `p`; ties go to the lowest index.
pub fn nearest_index(p: Vec3, set: &[Vec3]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (j, q) in set.iter().enumerate() {
        let d = dist2(p, *q);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.map(|(_, j)| j)
}

struct Grid {
    origin: Vec3,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    /// Cell-index bounds of the occupied region.
    lo: [i64; 3],
    hi: [i64; 3],
}

impl Grid {
    fn new(positions: &[Vec3], k: usize) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in positions {
            for c in 0..3 {
                min[c] = min[c].min(p[c]);
                max[c] = max[c].max(p[c]);
            }
        }
        let extent: Vec<f64> = (0..3).map(|c| (max[c] - min[c]).max(1e-12)).collect();
        let volume = extent.iter().product::<f64>();
        // aim for roughly k points per cell
        let per_cell = (k.max(1) as f64 / positions.len() as f64) * volume;
        let cell = per_cell.cbrt().max(extent.iter().cloned().fold(0.0, f64::max) * 1e-6);
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (i, p) in positions.iter().enumerate() {
            let key = Self::key_of(min, cell, *p);
            for c in 0..3 {
                lo[c] = lo[c].min(key[c]);
                hi[c] = hi[c].max(key[c]);
            }
            cells.entry(key).or_default().push(i);
        }
        Self {
            origin: min,
            cell,
            cells,
            lo,
            hi,
        }
    }

    fn key_of(origin: Vec3, cell: f64, p: Vec3) -> [i64; 3] {
        [
            ((p[0] - origin[0]) / cell).floor() as i64,
            ((p[1] - origin[1]) / cell).floor() as i64,
            ((p[2] - origin[2]) / cell).floor() as i64,
        ]
    }

    fn query(&self, positions: &[Vec3], i: usize, k: usize, cand: &mut Vec<(f64, usize)>) -> Vec<usize> {
        let p = positions[i];
        let center = Self::key_of(self.origin, self.cell, p);
        cand.clear();
        let max_shell = (0..3)
            .map(|c| (center[c] - self.lo[c]).abs().max((self.hi[c] - center[c]).abs()))
            .max()
            .unwrap_or(0);
        let mut shell = 0i64;
        loop {
            for dx in -shell..=shell {
                for dy in -shell..=shell {
                    for dz in -shell..=shell {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != shell {
                            continue;
                        }
                        let key = [center[0] + dx, center[1] + dy, center[2] + dz];
                        if let Some(members) = self.cells.get(&key) {
                            for &j in members {
                                if j != i {
                                    cand.push((dist2(p, positions[j]), j));
                                }
                            }
                        }
                    }
                }
            }
            // points outside the visited shells are at least `shell * cell` away
            if cand.len() >= k {
                select_smallest(cand, k);
                let bound = shell as f64 * self.cell;
                if cand[k - 1].0 < bound * bound {
                    break;
                }
            }
            if shell >= max_shell {
                select_smallest(cand, k);
                break;
            }
            shell += 1;
        }
        cand[..k].iter().map(|&(_, j)| j).collect()
    }
}

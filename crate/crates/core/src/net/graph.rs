//! Per-mesh network inputs, computed once and reused across epochs.

use crate::autodiff::Rows;
use crate::descriptors::DescriptorMatrix;
use crate::geom::{norm, scale, sub};
use crate::mesh::{GraphHierarchy, TetMesh};
use crate::so3::{cartesian_to_l1, sh_into, sh_len};
use crate::{Error, Result};

use super::config::ModelConfig;
use super::model::Network;

/// Inputs of one hierarchy level, in local indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelInputs {
    pub n: usize,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    /// One row per edge, or a single broadcast row.
    pub edge_attr: Rows,
    /// One row per vertex, or a single broadcast row.
    pub node_attr: Rows,
    pub edge_extra: Rows,
    pub graph_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphInputs {
    pub n: usize,
    pub node_input: Rows,
    pub levels: Vec<LevelInputs>,
    /// Pool maps from level 0 to 1 and from level 1 to 2.
    pub pools: Vec<Vec<usize>>,
}

impl GraphInputs {
    pub fn prepare(
        config: &ModelConfig,
        mesh: &TetMesh,
        hierarchy: &GraphHierarchy,
        descriptors: &DescriptorMatrix,
    ) -> Result<GraphInputs> {
        let n = mesh.n_vertices();
        if descriptors.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} descriptor rows for {n} vertices",
                descriptors.len()
            )));
        }
        if hierarchy.levels.len() != 3 || hierarchy.levels[0].len() != n {
            return Err(Error::ShapeMismatch(
                "hierarchy must have three levels with the full mesh at level 0".into(),
            ));
        }
        let ls = config.length_scale();
        let positions = mesh.positions();

        let mut node_input = Vec::new();
        let cols = match config {
            ModelConfig::Segnn(_) => {
                for row in &descriptors.rows {
                    for b in 0..3 {
                        let v = [row[3 * b], row[3 * b + 1], row[3 * b + 2]];
                        node_input.extend(cartesian_to_l1(v).map(|c| c / ls));
                    }
                }
                9
            }
            ModelConfig::Baseline(c) => {
                for (row, p) in descriptors.rows.iter().zip(positions) {
                    node_input.extend(row.iter().map(|v| v / ls));
                    if c.absolute_positions {
                        node_input.extend(p.map(|v| v / ls));
                    }
                }
                if c.absolute_positions {
                    12
                } else {
                    9
                }
            }
        };
        let node_input = Rows::new(n, cols, node_input)?;

        let mut levels = Vec::with_capacity(3);
        for level in &hierarchy.levels {
            let ln = level.len();
            let (sources, targets) = (level.edges.sources(), level.edges.targets());
            if sources.iter().chain(&targets).any(|&i| i >= ln) {
                return Err(Error::ShapeMismatch("edge index out of level range".into()));
            }
            let e = sources.len();
            let mut extra = Vec::with_capacity(e * 4);
            let mut deltas = Vec::with_capacity(e);
            for (&s, &t) in sources.iter().zip(&targets) {
                let d = scale(sub(positions[level.vertices[s]], positions[level.vertices[t]]), 1.0 / ls);
                deltas.push(d);
                let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                if matches!(config, ModelConfig::Baseline(_)) {
                    extra.extend(d);
                }
                extra.push(d2);
            }
            let extra_cols = if matches!(config, ModelConfig::Baseline(_)) { 4 } else { 1 };
            let (edge_attr, node_attr) = match config {
                ModelConfig::Segnn(c) => {
                    let dim = sh_len(c.attr_lmax);
                    let mut ea = Rows::zeros(e, dim);
                    for (r, d) in deltas.iter().enumerate() {
                        let len = norm(*d);
                        let row = ea.row_mut(r);
                        if len > 0.0 {
                            sh_into(c.attr_lmax, scale(*d, 1.0 / len), row);
                        } else {
                            row[0] = 1.0;
                        }
                    }
                    let mut na = Rows::zeros(ln, dim);
                    let mut count = vec![0usize; ln];
                    for (r, &t) in targets.iter().enumerate() {
                        count[t] += 1;
                        for (o, v) in na.row_mut(t).iter_mut().zip(ea.row(r)) {
                            *o += v;
                        }
                    }
                    for (t, &c) in count.iter().enumerate() {
                        if c == 0 {
                            na.row_mut(t)[0] = 1.0;
                        } else {
                            na.row_mut(t).iter_mut().for_each(|v| *v /= c as f64);
                        }
                    }
                    (ea, na)
                }
                ModelConfig::Baseline(_) => (Rows::new(1, 1, vec![1.0])?, Rows::new(1, 1, vec![1.0])?),
            };
            levels.push(LevelInputs {
                n: ln,
                sources,
                targets,
                edge_attr,
                node_attr,
                edge_extra: Rows::new(e, extra_cols, extra)?,
                graph_ids: vec![0; ln],
            });
        }
        let pools = hierarchy.levels[..2]
            .iter()
            .map(|l| {
                l.pool
                    .clone()
                    .ok_or_else(|| Error::Precondition("missing pool assignment".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphInputs {
            n,
            node_input,
            levels,
            pools,
        })
    }

    pub(crate) fn check(&self, net: &Network) -> Result<()> {
        let mismatch = |what: &str| Error::LayoutMismatch {
            expected: format!("inputs prepared for a {} network", net.config().name()),
            found: what.to_string(),
        };
        if self.node_input.cols != net.input_layout().total_dim() {
            return Err(mismatch("node input width"));
        }
        for l in &self.levels {
            if l.edge_attr.cols != net.attr_layout().total_dim()
                || l.edge_extra.cols != net.extra_layout().total_dim()
            {
                return Err(mismatch("edge input width"));
            }
        }
        Ok(())
    }
}

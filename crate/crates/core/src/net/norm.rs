//! Per-graph normalization.
//!
//! For every graph in a batch and every channel:
//!
//! - 0e channels: `(x - μ) / √(σ² + ε) · γ + β`;
//! - degree > 0 channels: `x / √(mean‖x‖² + ε) · γ`, where the mean runs over
//!   the graph's rows and `‖·‖` is the block norm. No centering, which would
//!   break equivariance.
//!
//! Parameters are all `γ` (one per channel) followed by `β` (one per 0e
//! channel). Statistics are recomputed per graph at train and test time alike.

use crate::autodiff::Rows;
use crate::so3::IrrepsLayout;
use crate::{Error, Result};

pub const NORM_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Channel {
    col: usize,
    dim: usize,
    scalar: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphNorm {
    layout: IrrepsLayout,
    channels: Vec<Channel>,
    n_scalar: usize,
}

impl GraphNorm {
    pub fn new(layout: IrrepsLayout) -> Self {
        let mut channels = Vec::new();
        let mut col = 0;
        for e in layout.entries() {
            for _ in 0..e.mult {
                channels.push(Channel {
                    col,
                    dim: e.irrep.dim(),
                    scalar: e.irrep.is_scalar(),
                });
                col += e.irrep.dim();
            }
        }
        let n_scalar = channels.iter().filter(|c| c.scalar).count();
        Self {
            layout,
            channels,
            n_scalar,
        }
    }

    pub fn layout(&self) -> &IrrepsLayout {
        &self.layout
    }

    pub fn num_params(&self) -> usize {
        self.channels.len() + self.n_scalar
    }

    /// `γ = 1`, `β = 0`.
    pub fn init(&self, params: &mut [f64]) {
        params[..self.channels.len()].fill(1.0);
        params[self.channels.len()..self.num_params()].fill(0.0);
    }

    pub fn identity_params(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params()];
        self.init(&mut p);
        p
    }

    fn check(&self, x: &Rows, graph_ids: &[usize], params: &[f64]) -> Result<usize> {
        if x.cols != self.layout.total_dim() {
            return Err(Error::LayoutMismatch {
                expected: self.layout.to_string(),
                found: format!("{} columns", x.cols),
            });
        }
        if graph_ids.len() != x.rows || params.len() != self.num_params() {
            return Err(Error::ShapeMismatch(format!(
                "graph norm: {} rows, {} graph ids, {} of {} parameters",
                x.rows,
                graph_ids.len(),
                params.len(),
                self.num_params()
            )));
        }
        Ok(graph_ids.iter().max().map_or(0, |m| m + 1))
    }

    /// Per graph and channel: `(count, mean, scale)` where the output before
    /// the affine map is `(x - mean) / scale`.
    fn stats(&self, x: &Rows, graph_ids: &[usize], n_graphs: usize) -> Vec<[f64; 3]> {
        let nc = self.channels.len();
        let mut st = vec![[0.0; 3]; n_graphs * nc];
        for r in 0..x.rows {
            let g = graph_ids[r];
            let xr = x.row(r);
            for (k, ch) in self.channels.iter().enumerate() {
                let s = &mut st[g * nc + k];
                s[0] += 1.0;
                if ch.scalar {
                    s[1] += xr[ch.col];
                }
            }
        }
        for s in &mut st {
            if s[0] > 0.0 {
                s[1] /= s[0];
            }
        }
        for r in 0..x.rows {
            let g = graph_ids[r];
            let xr = x.row(r);
            for (k, ch) in self.channels.iter().enumerate() {
                let s = &mut st[g * nc + k];
                s[2] += xr[ch.col..ch.col + ch.dim]
                    .iter()
                    .map(|v| (v - s[1]).powi(2))
                    .sum::<f64>();
            }
        }
        for s in &mut st {
            if s[0] > 0.0 {
                s[2] = (s[2] / s[0] + NORM_EPS).sqrt();
            }
        }
        st
    }

    pub fn forward(&self, x: &Rows, graph_ids: &[usize], params: &[f64]) -> Result<Rows> {
        let n_graphs = self.check(x, graph_ids, params)?;
        let st = self.stats(x, graph_ids, n_graphs);
        let nc = self.channels.len();
        let (gamma, beta) = params.split_at(nc);
        let mut out = Rows::zeros(x.rows, x.cols);
        for r in 0..x.rows {
            let g = graph_ids[r];
            let (xr, or) = (x.row(r), out.row_mut(r));
            let mut b = 0;
            for (k, ch) in self.channels.iter().enumerate() {
                let [_, mean, scale] = st[g * nc + k];
                let f = gamma[k] / scale;
                for i in ch.col..ch.col + ch.dim {
                    or[i] = (xr[i] - mean) * f;
                }
                if ch.scalar {
                    or[ch.col] += beta[b];
                    b += 1;
                }
            }
        }
        Ok(out)
    }

    pub fn backward(
        &self,
        x: &Rows,
        graph_ids: &[usize],
        params: &[f64],
        gout: &Rows,
        gx: Option<&mut Rows>,
        gparams: &mut [f64],
    ) -> Result<()> {
        let n_graphs = self.check(x, graph_ids, params)?;
        let st = self.stats(x, graph_ids, n_graphs);
        let nc = self.channels.len();
        let gamma = &params[..nc];
        // Per graph and channel: Σ g and Σ g·x̂ with x̂ the pre-affine output.
        let mut acc = vec![[0.0; 2]; n_graphs * nc];
        for r in 0..x.rows {
            let g = graph_ids[r];
            let (xr, gr) = (x.row(r), gout.row(r));
            for (k, ch) in self.channels.iter().enumerate() {
                let [_, mean, scale] = st[g * nc + k];
                let a = &mut acc[g * nc + k];
                for i in ch.col..ch.col + ch.dim {
                    a[0] += gr[i];
                    a[1] += gr[i] * (xr[i] - mean) / scale;
                }
            }
        }
        let (ggamma, gbeta) = gparams.split_at_mut(nc);
        for g in 0..n_graphs {
            let mut b = 0;
            for (k, ch) in self.channels.iter().enumerate() {
                let a = acc[g * nc + k];
                ggamma[k] += a[1];
                if ch.scalar {
                    gbeta[b] += a[0];
                    b += 1;
                }
            }
        }
        let Some(gx) = gx else { return Ok(()) };
        for r in 0..x.rows {
            let g = graph_ids[r];
            let (xr, gr, gxr) = (x.row(r), gout.row(r), gx.row_mut(r));
            for (k, ch) in self.channels.iter().enumerate() {
                let [n, mean, scale] = st[g * nc + k];
                let [sum_g, sum_gx] = acc[g * nc + k];
                let f = gamma[k] / scale;
                for i in ch.col..ch.col + ch.dim {
                    let xh = (xr[i] - mean) / scale;
                    gxr[i] += if ch.scalar {
                        f * (gr[i] - sum_g / n - xh * sum_gx / n)
                    } else {
                        f * (gr[i] - xh * sum_gx / n)
                    };
                }
            }
        }
        Ok(())
    }
}

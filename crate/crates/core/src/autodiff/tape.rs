use std::borrow::Cow;

use super::Rows;
use crate::net::{pool, Gate, GraphNorm, TensorProduct};
use crate::{Error, Result};

/// Handle to a recorded value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<'a> {
    Leaf,
    Constant,
    Gather {
        x: NodeId,
        index: Cow<'a, [usize]>,
    },
    SegmentMean {
        x: NodeId,
        segment: Cow<'a, [usize]>,
    },
    Concat {
        parts: Vec<NodeId>,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    TensorProduct {
        tp: &'a TensorProduct,
        x: NodeId,
        y: NodeId,
        offset: usize,
    },
    Gate {
        gate: &'a Gate,
        x: NodeId,
    },
    GraphNorm {
        norm: &'a GraphNorm,
        x: NodeId,
        graph_ids: Cow<'a, [usize]>,
        offset: usize,
    },
    L1 {
        x: NodeId,
        target: Cow<'a, [f64]>,
        scale: f64,
    },
    Dot {
        x: NodeId,
        weights: Vec<f64>,
    },
}

struct Node<'a> {
    value: Cow<'a, Rows>,
    op: Op<'a>,
    needs_grad: bool,
}

/// Single-use record of one forward pass.
pub struct Tape<'a> {
    params: &'a [f64],
    nodes: Vec<Node<'a>>,
}

/// Result of [`Tape::backward`].
#[derive(Clone, Debug)]
pub struct Gradients {
    pub params: Vec<f64>,
    nodes: Vec<Option<Rows>>,
}

impl Gradients {
    /// Gradient with respect to a recorded value; `None` for constants and
    /// values the loss does not depend on.
    pub fn wrt(&self, id: NodeId) -> Option<&Rows> {
        self.nodes.get(id.0).and_then(Option::as_ref)
    }
}

impl<'a> Tape<'a> {
    pub fn new(params: &'a [f64]) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'a [f64] {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Rows {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Cow<'a, Rows>, op: Op<'a>, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn get(&self, id: NodeId) -> Result<&Node<'a>> {
        self.nodes
            .get(id.0)
            .ok_or_else(|| Error::Precondition(format!("node {} was not recorded", id.0)))
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    fn param_slice(&self, offset: usize, len: usize) -> Result<&'a [f64]> {
        self.params.get(offset..offset + len).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "parameter range {offset}..{} exceeds {}",
                offset + len,
                self.params.len()
            ))
        })
    }

    /// Input whose gradient is tracked.
    pub fn leaf(&mut self, value: Rows) -> NodeId {
        self.push(Cow::Owned(value), Op::Leaf, true)
    }

    /// Input treated as a constant.
    pub fn constant(&mut self, value: Cow<'a, Rows>) -> NodeId {
        self.push(value, Op::Constant, false)
    }

    pub fn gather(&mut self, x: NodeId, index: Cow<'a, [usize]>) -> Result<NodeId> {
        let value = pool::gather(&self.get(x)?.value, &index)?;
        let ng = self.needs(x);
        Ok(self.push(Cow::Owned(value), Op::Gather { x, index }, ng))
    }

    pub fn segment_mean(&mut self, x: NodeId, segment: Cow<'a, [usize]>, n_out: usize) -> Result<NodeId> {
        let value = pool::segment_mean(&self.get(x)?.value, &segment, n_out)?;
        let ng = self.needs(x);
        Ok(self.push(Cow::Owned(value), Op::SegmentMean { x, segment }, ng))
    }

    /// Column-wise concatenation.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Precondition("concat of nothing".into()))?;
        let rows = self.get(*first)?.value.rows;
        let mut cols = 0;
        for &p in parts {
            let v = &self.get(p)?.value;
            if v.rows != rows {
                return Err(Error::ShapeMismatch(format!(
                    "concat of {} and {} rows",
                    rows, v.rows
                )));
            }
            cols += v.cols;
        }
        let mut out = Rows::zeros(rows, cols);
        for r in 0..rows {
            let mut c = 0;
            for &p in parts {
                let src = self.nodes[p.0].value.row(r);
                out.row_mut(r)[c..c + src.len()].copy_from_slice(src);
                c += src.len();
            }
        }
        let ng = parts.iter().any(|p| self.needs(*p));
        Ok(self.push(
            Cow::Owned(out),
            Op::Concat {
                parts: parts.to_vec(),
            },
            ng,
        ))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (&self.get(a)?.value, &self.get(b)?.value);
        if (va.rows, va.cols) != (vb.rows, vb.cols) {
            return Err(Error::ShapeMismatch(format!(
                "add of {}×{} and {}×{}",
                va.rows, va.cols, vb.rows, vb.cols
            )));
        }
        let data = va.data.iter().zip(&vb.data).map(|(p, q)| p + q).collect();
        let value = Rows::new(va.rows, va.cols, data)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(Cow::Owned(value), Op::Add { a, b }, ng))
    }

    /// `tp(x, y)` with parameters at `offset`; `y` may be a single row.
    pub fn tensor_product(&mut self, tp: &'a TensorProduct, x: NodeId, y: NodeId, offset: usize) -> Result<NodeId> {
        if x == y {
            return Err(Error::Precondition("tensor product operands must be distinct nodes".into()));
        }
        let w = self.param_slice(offset, tp.num_params())?;
        let value = tp.forward(&self.get(x)?.value, &self.get(y)?.value, w)?;
        Ok(self.push(Cow::Owned(value), Op::TensorProduct { tp, x, y, offset }, true))
    }

    pub fn gate(&mut self, gate: &'a Gate, x: NodeId) -> Result<NodeId> {
        let value = gate.forward(&self.get(x)?.value)?;
        let ng = self.needs(x);
        Ok(self.push(Cow::Owned(value), Op::Gate { gate, x }, ng))
    }

    pub fn graph_norm(
        &mut self,
        norm: &'a GraphNorm,
        x: NodeId,
        graph_ids: Cow<'a, [usize]>,
        offset: usize,
    ) -> Result<NodeId> {
        let p = self.param_slice(offset, norm.num_params())?;
        let value = norm.forward(&self.get(x)?.value, &graph_ids, p)?;
        Ok(self.push(
            Cow::Owned(value),
            Op::GraphNorm {
                norm,
                x,
                graph_ids,
                offset,
            },
            true,
        ))
    }

    /// `mean |scale · x - target|` over all entries; a 1×1 node.
    pub fn l1_loss(&mut self, x: NodeId, target: Cow<'a, [f64]>, scale: f64) -> Result<NodeId> {
        let v = &self.get(x)?.value;
        if v.data.len() != target.len() || target.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "L1 loss of {} predictions against {} targets",
                v.data.len(),
                target.len()
            )));
        }
        let loss = v
            .data
            .iter()
            .zip(target.iter())
            .map(|(p, t)| (scale * p - t).abs())
            .sum::<f64>()
            / target.len() as f64;
        let ng = self.needs(x);
        Ok(self.push(
            Cow::Owned(Rows::new(1, 1, vec![loss])?),
            Op::L1 { x, target, scale },
            ng,
        ))
    }

    /// `Σ weights · x`; a 1×1 node, handy for projecting onto a scalar.
    pub fn dot(&mut self, x: NodeId, weights: Vec<f64>) -> Result<NodeId> {
        let v = &self.get(x)?.value;
        if v.data.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "dot of {} values with {} weights",
                v.data.len(),
                weights.len()
            )));
        }
        let s = v.data.iter().zip(&weights).map(|(a, b)| a * b).sum();
        let ng = self.needs(x);
        Ok(self.push(Cow::Owned(Rows::new(1, 1, vec![s])?), Op::Dot { x, weights }, ng))
    }

    /// Gradients of the 1×1 node `loss` with respect to every parameter and
    /// every tracked value.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let root = self.get(loss)?;
        if (root.value.rows, root.value.cols) != (1, 1) {
            return Err(Error::Precondition(format!(
                "backward from a {}×{} node; need a scalar",
                root.value.rows, root.value.cols
            )));
        }
        let mut grads: Vec<Option<Rows>> = vec![None; self.nodes.len()];
        let mut gparams = vec![0.0; self.params.len()];
        grads[loss.0] = Some(Rows::new(1, 1, vec![1.0])?);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let slot = |id: NodeId, grads: &mut Vec<Option<Rows>>| -> Option<Rows> {
                if !self.needs(id) {
                    return None;
                }
                let v = &self.nodes[id.0].value;
                Some(grads[id.0].take().unwrap_or_else(|| Rows::zeros(v.rows, v.cols)))
            };
            match &node.op {
                Op::Leaf | Op::Constant => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::Gather { x, index } => {
                    if let Some(mut gx) = slot(*x, &mut grads) {
                        pool::gather_backward(&g, index, &mut gx);
                        grads[x.0] = Some(gx);
                    }
                }
                Op::SegmentMean { x, segment } => {
                    if let Some(mut gx) = slot(*x, &mut grads) {
                        pool::segment_mean_backward(&g, segment, &mut gx)?;
                        grads[x.0] = Some(gx);
                    }
                }
                Op::Concat { parts } => {
                    let mut c = 0;
                    for p in parts {
                        let cols = self.nodes[p.0].value.cols;
                        if let Some(mut gp) = slot(*p, &mut grads) {
                            for r in 0..g.rows {
                                for (d, s) in gp.row_mut(r).iter_mut().zip(&g.row(r)[c..c + cols]) {
                                    *d += s;
                                }
                            }
                            grads[p.0] = Some(gp);
                        }
                        c += cols;
                    }
                }
                Op::Add { a, b } => {
                    for id in [*a, *b] {
                        if let Some(mut gi) = slot(id, &mut grads) {
                            for (d, s) in gi.data.iter_mut().zip(&g.data) {
                                *d += s;
                            }
                            grads[id.0] = Some(gi);
                        }
                    }
                }
                Op::TensorProduct { tp, x, y, offset } => {
                    let mut gx = slot(*x, &mut grads);
                    let mut gy = if x == y { None } else { slot(*y, &mut grads) };
                    let n = tp.num_params();
                    tp.backward(
                        &self.nodes[x.0].value,
                        &self.nodes[y.0].value,
                        &self.params[*offset..offset + n],
                        &g,
                        gx.as_mut(),
                        gy.as_mut(),
                        &mut gparams[*offset..offset + n],
                    )?;
                    if let Some(gx) = gx {
                        grads[x.0] = Some(gx);
                    }
                    if let Some(gy) = gy {
                        grads[y.0] = Some(gy);
                    }
                }
                Op::Gate { gate, x } => {
                    if let Some(mut gx) = slot(*x, &mut grads) {
                        gate.backward(&self.nodes[x.0].value, &g, &mut gx)?;
                        grads[x.0] = Some(gx);
                    }
                }
                Op::GraphNorm {
                    norm,
                    x,
                    graph_ids,
                    offset,
                } => {
                    let mut gx = slot(*x, &mut grads);
                    let n = norm.num_params();
                    norm.backward(
                        &self.nodes[x.0].value,
                        graph_ids,
                        &self.params[*offset..offset + n],
                        &g,
                        gx.as_mut(),
                        &mut gparams[*offset..offset + n],
                    )?;
                    if let Some(gx) = gx {
                        grads[x.0] = Some(gx);
                    }
                }
                Op::L1 { x, target, scale } => {
                    if let Some(mut gx) = slot(*x, &mut grads) {
                        let f = g.data[0] * scale / target.len() as f64;
                        let v = &self.nodes[x.0].value;
                        for ((d, p), t) in gx.data.iter_mut().zip(&v.data).zip(target.iter()) {
                            let r = scale * p - t;
                            // Subgradient 0 at a zero residual.
                            if r > 0.0 {
                                *d += f;
                            } else if r < 0.0 {
                                *d -= f;
                            }
                        }
                        grads[x.0] = Some(gx);
                    }
                }
                Op::Dot { x, weights } => {
                    if let Some(mut gx) = slot(*x, &mut grads) {
                        for (d, w) in gx.data.iter_mut().zip(weights) {
                            *d += g.data[0] * w;
                        }
                        grads[x.0] = Some(gx);
                    }
                }
            }
        }
        Ok(Gradients {
            params: gparams,
            nodes: grads,
        })
    }
}

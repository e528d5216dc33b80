//! Three-scale message-passing network shared by the equivariant model and
//! the baseline.
//!
//! ```text
//! embed → L layers @V0 ─┬─ pool → L layers @V1 ─┬─ pool → L layers @V2
//!                       │                        └─ unpool + skip → L layers @V1
//!                       └──────────────────────────── unpool + skip → L layers @V0 → output
//! ```
//!
//! A layer computes messages `φ_m(f_i, f_j, extra_ij; a_ij)` on every edge
//! `j → i`, averages them per target, and updates `f_i ← f_i + φ_f(f_i, m̄_i;
//! a_i)`. Both `φ` are tensor product → gate → tensor product, steered by the
//! attributes. For the equivariant model the attributes are spherical
//! harmonics of the edge directions; for the baseline they are the constant 1
//! and every layout is plain scalars.

use std::borrow::Cow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::graph::GraphInputs;
use super::{Gate, GraphNorm, NetworkParameters, ParamRegistry, TensorProduct};
use crate::autodiff::{NodeId, Rows, Tape};
use crate::field::VelocityField;
use crate::so3::{l1_to_cartesian, IrrepsLayout, SteerableTensor};
use crate::{Error, Result};

pub(crate) const STAGES: [(&str, usize); 5] = [
    ("v0_down", 0),
    ("v1_down", 1),
    ("v2", 2),
    ("v1_up", 1),
    ("v0_up", 0),
];

struct Tp {
    tp: TensorProduct,
    offset: usize,
}

struct Layer {
    level: usize,
    residual: bool,
    message1: Tp,
    message2: Tp,
    update1: Tp,
    update2: Tp,
    norm: Option<(GraphNorm, usize)>,
}

pub struct Network {
    config: ModelConfig,
    registry: ParamRegistry,
    input: IrrepsLayout,
    attr: IrrepsLayout,
    extra: IrrepsLayout,
    hidden: IrrepsLayout,
    output: IrrepsLayout,
    gate: Gate,
    embed: Tp,
    layers: Vec<Layer>,
    readout: Tp,
}

impl Network {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (input, attr, extra, hidden, output): (IrrepsLayout, _, _, _, IrrepsLayout) = match &config {
            ModelConfig::Segnn(c) => (
                "3x1o".parse()?,
                IrrepsLayout::spherical_harmonics(c.attr_lmax)?,
                IrrepsLayout::scalars(1),
                c.hidden.clone(),
                "1x1o".parse()?,
            ),
            ModelConfig::Baseline(c) => (
                IrrepsLayout::scalars(if c.absolute_positions { 12 } else { 9 }),
                IrrepsLayout::scalars(1),
                IrrepsLayout::scalars(4),
                IrrepsLayout::scalars(c.width),
                IrrepsLayout::scalars(3),
            ),
        };
        let gate = Gate::for_output(&hidden)?;
        let mut registry = ParamRegistry::new();
        let mut tp = |name: String, in1: &IrrepsLayout, out: &IrrepsLayout| -> Result<Tp> {
            let tp = TensorProduct::new(in1.clone(), attr.clone(), out.clone(), true)?;
            let offset = registry.register(name, tp.num_params());
            Ok(Tp { tp, offset })
        };
        let embed = tp("embed".into(), &input, gate.input_layout())?;
        let message_in = hidden.concat(&hidden).concat(&extra);
        let update_in = hidden.concat(&hidden);
        let mut layers = Vec::new();
        let mut norms = Vec::new();
        for (stage, level) in STAGES {
            for l in 0..config.layers_per_scale() {
                let name = |part: &str| format!("{stage}.{l}.{part}");
                layers.push(Layer {
                    level,
                    residual: l > 0,
                    message1: tp(name("message1"), &message_in, gate.input_layout())?,
                    message2: tp(name("message2"), &hidden, &hidden)?,
                    update1: tp(name("update1"), &update_in, gate.input_layout())?,
                    update2: tp(name("update2"), &hidden, &hidden)?,
                    norm: None,
                });
                norms.push(name("norm"));
            }
        }
        let readout = tp("readout".into(), &hidden, &output)?;
        if config.normalize() {
            for (layer, name) in layers.iter_mut().zip(norms) {
                let norm = GraphNorm::new(hidden.clone());
                let offset = registry.register(name, norm.num_params());
                layer.norm = Some((norm, offset));
            }
        }
        Ok(Self {
            config,
            registry,
            input,
            attr,
            extra,
            hidden,
            output,
            gate,
            embed,
            layers,
            readout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn registry(&self) -> &ParamRegistry {
        &self.registry
    }

    pub fn num_params(&self) -> usize {
        self.registry.total()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_layout(&self) -> &IrrepsLayout {
        &self.input
    }

    pub fn attr_layout(&self) -> &IrrepsLayout {
        &self.attr
    }

    pub fn extra_layout(&self) -> &IrrepsLayout {
        &self.extra
    }

    pub fn hidden_layout(&self) -> &IrrepsLayout {
        &self.hidden
    }

    pub fn output_layout(&self) -> &IrrepsLayout {
        &self.output
    }

    pub fn is_equivariant(&self) -> bool {
        matches!(self.config, ModelConfig::Segnn(_))
    }

    /// Slot of the readout tensor product; the output is linear in it.
    pub fn readout_slot(&self) -> (usize, usize) {
        (self.readout.offset, self.readout.tp.num_params())
    }

    pub fn init_params(&self, seed: u64) -> NetworkParameters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; self.num_params()];
        let mut init = |t: &Tp| t.tp.init(&mut rng, &mut values[t.offset..t.offset + t.tp.num_params()]);
        init(&self.embed);
        for layer in &self.layers {
            for t in [&layer.message1, &layer.message2, &layer.update1, &layer.update2] {
                init(t);
            }
        }
        init(&self.readout);
        for layer in &self.layers {
            if let Some((norm, off)) = &layer.norm {
                norm.init(&mut values[*off..off + norm.num_params()]);
            }
        }
        NetworkParameters::new(self.registry.clone(), values).expect("registry matches")
    }

    pub fn check_params(&self, params: &NetworkParameters) -> Result<()> {
        if params.registry != self.registry {
            return Err(Error::LayoutMismatch {
                expected: format!("{} parameters of this network", self.num_params()),
                found: format!("{} parameters of another layout", params.len()),
            });
        }
        Ok(())
    }

    fn record_tp<'a>(&'a self, tape: &mut Tape<'a>, t: &'a Tp, x: NodeId, attr: NodeId) -> Result<NodeId> {
        tape.tensor_product(&t.tp, x, attr, t.offset)
    }

    /// `φ_m(f_i, f_j, extra; a_ij)` for aligned rows of its arguments.
    pub fn record_message<'a>(
        &'a self,
        tape: &mut Tape<'a>,
        layer: usize,
        f_i: NodeId,
        f_j: NodeId,
        extra: NodeId,
        a_ij: NodeId,
    ) -> Result<NodeId> {
        let l = self.layer(layer)?;
        let x = tape.concat(&[f_i, f_j, extra])?;
        let h = self.record_tp(tape, &l.message1, x, a_ij)?;
        let h = tape.gate(&self.gate, h)?;
        self.record_tp(tape, &l.message2, h, a_ij)
    }

    /// `f_i + φ_f(f_i, m̄_i; a_i)`, the residual only where the layer has one.
    pub fn record_update<'a>(
        &'a self,
        tape: &mut Tape<'a>,
        layer: usize,
        f: NodeId,
        aggregated: NodeId,
        a_i: NodeId,
    ) -> Result<NodeId> {
        let l = self.layer(layer)?;
        let x = tape.concat(&[f, aggregated])?;
        let h = self.record_tp(tape, &l.update1, x, a_i)?;
        let h = tape.gate(&self.gate, h)?;
        let h = self.record_tp(tape, &l.update2, h, a_i)?;
        if l.residual {
            tape.add(f, h)
        } else {
            Ok(h)
        }
    }

    fn layer(&self, i: usize) -> Result<&Layer> {
        self.layers
            .get(i)
            .ok_or_else(|| Error::Precondition(format!("network has no layer {i}")))
    }

    fn record_layer<'a>(&'a self, tape: &mut Tape<'a>, g: &'a GraphInputs, i: usize, f: NodeId) -> Result<NodeId> {
        let l = &self.layers[i];
        let lv = &g.levels[l.level];
        let f_i = tape.gather(f, Cow::Borrowed(&lv.targets))?;
        let f_j = tape.gather(f, Cow::Borrowed(&lv.sources))?;
        let extra = tape.constant(Cow::Borrowed(&lv.edge_extra));
        let a_ij = tape.constant(Cow::Borrowed(&lv.edge_attr));
        let m = self.record_message(tape, i, f_i, f_j, extra, a_ij)?;
        let agg = tape.segment_mean(m, Cow::Borrowed(&lv.targets), lv.n)?;
        let a_i = tape.constant(Cow::Borrowed(&lv.node_attr));
        let out = self.record_update(tape, i, f, agg, a_i)?;
        match &l.norm {
            Some((norm, off)) => tape.graph_norm(norm, out, Cow::Borrowed(&lv.graph_ids), *off),
            None => Ok(out),
        }
    }

    /// Records the whole forward pass; the returned node holds one output row
    /// per vertex in the network's output layout.
    pub fn record<'a>(&'a self, tape: &mut Tape<'a>, g: &'a GraphInputs) -> Result<NodeId> {
        g.check(self)?;
        if tape.params().len() != self.num_params() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for a network with {}",
                tape.params().len(),
                self.num_params()
            )));
        }
        let lps = self.config.layers_per_scale();
        let x = tape.constant(Cow::Borrowed(&g.node_input));
        let a0 = tape.constant(Cow::Borrowed(&g.levels[0].node_attr));
        let h = self.record_tp(tape, &self.embed, x, a0)?;
        let mut f = tape.gate(&self.gate, h)?;
        let mut skips = Vec::new();
        for (s, (_, level)) in STAGES.iter().enumerate() {
            match s {
                1 | 2 => {
                    skips.push(f);
                    f = tape.segment_mean(f, Cow::Borrowed(&g.pools[level - 1]), g.levels[*level].n)?;
                }
                3 | 4 => {
                    let up = tape.gather(f, Cow::Borrowed(&g.pools[*level]))?;
                    let skip = skips.pop().expect("matching down stage");
                    f = tape.add(up, skip)?;
                }
                _ => {}
            }
            for l in 0..lps {
                f = self.record_layer(tape, g, s * lps + l, f)?;
            }
        }
        self.record_tp(tape, &self.readout, f, a0)
    }

    /// Output rows to Cartesian velocities in mm/s.
    fn to_field(&self, out: &Rows) -> VelocityField {
        let s = self.config.velocity_scale();
        let rows = (0..out.rows)
            .map(|r| {
                let o = out.row(r);
                let v = if self.is_equivariant() {
                    l1_to_cartesian([o[0], o[1], o[2]])
                } else {
                    [o[0], o[1], o[2]]
                };
                v.map(|c| c * s)
            })
            .collect();
        VelocityField::new(rows)
    }

    /// Targets in output-row order and units, for the loss.
    fn target_rows(&self, target: &VelocityField) -> Vec<f64> {
        target
            .rows
            .iter()
            .flat_map(|v| {
                if self.is_equivariant() {
                    crate::so3::cartesian_to_l1(*v)
                } else {
                    *v
                }
            })
            .collect()
    }

    pub fn forward(&self, g: &GraphInputs, params: &[f64]) -> Result<VelocityField> {
        let mut tape = Tape::new(params);
        let out = self.record(&mut tape, g)?;
        Ok(self.to_field(tape.value(out)))
    }

    /// Mean absolute error over all velocity components, in mm/s.
    pub fn loss(&self, g: &GraphInputs, target: &VelocityField, params: &[f64]) -> Result<f64> {
        let mut tape = Tape::new(params);
        let out = self.record(&mut tape, g)?;
        let t = self.target_rows(target);
        let loss = tape.l1_loss(out, Cow::Owned(t), self.config.velocity_scale())?;
        Ok(tape.value(loss).data[0])
    }

    pub fn loss_and_grad(&self, g: &GraphInputs, target: &VelocityField, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        if target.len() != g.n {
            return Err(Error::ShapeMismatch(format!(
                "target has {} rows for {} vertices",
                target.len(),
                g.n
            )));
        }
        let mut tape = Tape::new(params);
        let out = self.record(&mut tape, g)?;
        let t = self.target_rows(target);
        let loss = tape.l1_loss(out, Cow::Owned(t), self.config.velocity_scale())?;
        let value = tape.value(loss).data[0];
        Ok((value, tape.backward(loss)?.params))
    }

    fn single<'a>(tape: &mut Tape<'a>, t: &SteerableTensor, expected: &IrrepsLayout) -> Result<NodeId> {
        if t.layout() != expected {
            return Err(Error::LayoutMismatch {
                expected: expected.to_string(),
                found: t.layout().to_string(),
            });
        }
        let rows = Rows::new(1, t.coefficients().len(), t.coefficients().to_vec())?;
        Ok(tape.constant(Cow::Owned(rows)))
    }

    /// Message of layer `layer` for a single edge; `sq_dist` in mm².
    pub fn message(
        &self,
        params: &[f64],
        layer: usize,
        f_i: &SteerableTensor,
        f_j: &SteerableTensor,
        sq_dist: f64,
        a_ij: &SteerableTensor,
    ) -> Result<SteerableTensor> {
        if !self.is_equivariant() {
            return Err(Error::Precondition("single-edge messages need the equivariant model".into()));
        }
        let mut tape = Tape::new(params);
        let fi = Self::single(&mut tape, f_i, &self.hidden)?;
        let fj = Self::single(&mut tape, f_j, &self.hidden)?;
        let ls = self.config.length_scale();
        let extra = tape.constant(Cow::Owned(Rows::new(1, 1, vec![sq_dist / (ls * ls)])?));
        let a = Self::single(&mut tape, a_ij, &self.attr)?;
        let m = self.record_message(&mut tape, layer, fi, fj, extra, a)?;
        SteerableTensor::new(self.hidden.clone(), tape.value(m).data.clone())
    }

    /// Update of layer `layer` for a single vertex.
    pub fn update(
        &self,
        params: &[f64],
        layer: usize,
        f_i: &SteerableTensor,
        aggregated: &SteerableTensor,
        a_i: &SteerableTensor,
    ) -> Result<SteerableTensor> {
        let mut tape = Tape::new(params);
        let f = Self::single(&mut tape, f_i, &self.hidden)?;
        let m = Self::single(&mut tape, aggregated, &self.hidden)?;
        let a = Self::single(&mut tape, a_i, &self.attr)?;
        let u = self.record_update(&mut tape, layer, f, m, a)?;
        SteerableTensor::new(self.hidden.clone(), tape.value(u).data.clone())
    }

    /// Whether layer `layer` adds its input back.
    pub fn has_residual(&self, layer: usize) -> bool {
        self.layers.get(layer).is_some_and(|l| l.residual)
    }

    /// Parameter range of the update block `φ_f` of `layer`.
    pub fn update_slot(&self, layer: usize) -> Result<std::ops::Range<usize>> {
        let l = self.layer(layer)?;
        Ok(l.update1.offset..l.update2.offset + l.update2.tp.num_params())
    }
}

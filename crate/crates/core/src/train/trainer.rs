use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use crate::field::VelocityField;
use crate::net::{GraphInputs, Network, NetworkParameters};
use crate::{Error, Result};

/// One training or evaluation graph with its target.
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub inputs: GraphInputs,
    pub target: VelocityField,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without a new best validation loss.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            batch_size: 2,
            max_epochs: 500,
            patience: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the per-sample losses seen during the epoch, each taken
    /// before its batch update.
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation loss.
    pub best: NetworkParameters,
    pub best_epoch: usize,
    /// Parameters after the last epoch run.
    pub last: NetworkParameters,
    /// Epoch 0 holds the losses of the initial parameters.
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn history_csv(&self) -> String {
        history_csv(&self.history)
    }
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss\n");
    for r in history {
        let _ = writeln!(s, "{},{},{}", r.epoch, r.train_loss, r.val_loss);
    }
    s
}

/// Mean L1 loss over `samples`, evaluated in parallel and reduced in order.
pub fn mean_loss(net: &Network, samples: &[TrainSample], params: &[f64]) -> Result<f64> {
    let losses = samples
        .par_iter()
        .map(|s| net.loss(&s.inputs, &s.target, params))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

pub fn train(
    net: &Network,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
    init: NetworkParameters,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_callback(net, train_set, val_set, init, config, |_, _| Ok(()))
}

/// As [`train`], calling `on_epoch(epoch, params)` after every epoch.
///
/// Each batch gradient is the sum of per-sample gradients; the samples of a
/// batch run concurrently and their gradients are added in batch order, so
/// results do not depend on the thread count.
pub fn train_with_callback(
    net: &Network,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
    init: NetworkParameters,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &[f64]) -> Result<()>,
) -> Result<TrainOutcome> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptySplit(format!(
            "{} training and {} validation samples",
            train_set.len(),
            val_set.len()
        )));
    }
    if config.batch_size == 0 || !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Precondition("batch size must be positive and the learning rate finite and non-negative".into()));
    }
    net.check_params(&init)?;
    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = init.values.clone();
    let mut state = AdamState::new(params.len());
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: mean_loss(net, train_set, &params)?,
        val_loss: mean_loss(net, val_set, &params)?,
    }];
    let (mut best, mut best_epoch, mut best_val) = (params.clone(), 0, history[0].val_loss);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| net.loss_and_grad(&train_set[i].inputs, &train_set[i].target, &params))
                .collect::<Result<Vec<_>>>()?;
            let mut grad = vec![0.0; params.len()];
            for (loss, g) in &results {
                loss_sum += loss;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            adam_step(&mut params, &grad, &mut state, &adam).map_err(|e| match e {
                Error::NonFiniteGradient { index, .. } => Error::NonFiniteGradient {
                    index,
                    name: slot_name(&init, index),
                },
                other => other,
            })?;
        }
        let val_loss = mean_loss(net, val_set, &params)?;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss,
        });
        on_epoch(epoch, &params)?;
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best.clone_from(&params);
        } else if epoch - best_epoch >= config.patience {
            break;
        }
    }
    Ok(TrainOutcome {
        best: NetworkParameters::new(init.registry.clone(), best)?,
        best_epoch,
        last: NetworkParameters::new(init.registry, params)?,
        history,
    })
}

fn slot_name(params: &NetworkParameters, index: usize) -> String {
    params
        .registry
        .slots()
        .iter()
        .find(|s| (s.offset..s.offset + s.len).contains(&index))
        .map_or_else(String::new, |s| format!("{}[{}]", s.name, index - s.offset))
}

impl TrainSample {
    /// Builds the hierarchy, descriptors and network inputs of one mesh.
    pub fn prepare(
        model: &crate::net::ModelConfig,
        graph: &crate::net::GraphConfig,
        mesh: &crate::mesh::TetMesh,
        target: VelocityField,
    ) -> Result<Self> {
        let hierarchy = crate::mesh::build_hierarchy(mesh, graph.k, graph.ratios)?;
        let descriptors = crate::descriptors::compute_descriptors(mesh)?;
        Ok(Self {
            inputs: GraphInputs::prepare(model, mesh, &hierarchy, &descriptors)?,
            target,
        })
    }
}

/// Prepares many meshes in parallel, keeping their order.
pub fn prepare_samples(
    model: &crate::net::ModelConfig,
    graph: &crate::net::GraphConfig,
    pairs: &[(&crate::mesh::TetMesh, &VelocityField)],
) -> Result<Vec<TrainSample>> {
    pairs
        .par_iter()
        .map(|(m, f)| TrainSample::prepare(model, graph, m, (*f).clone()))
        .collect()
}

use std::path::Path;

use equiflow::net::{BaselineConfig, Checkpoint, GraphConfig, ModelConfig, Network, SegnnConfig};
use equiflow::synth::{load_dataset, Dataset};
use equiflow::train::{prepare_samples, train_with_callback, TrainConfig, TrainSample};

use super::{to_value, write};
use crate::manifest::Run;
use crate::{CliError, ModelKind, TrainArgs};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOSS_FILE: &str = "loss.csv";

fn model_config(args: &TrainArgs) -> Result<ModelConfig, CliError> {
    let config = match args.model {
        ModelKind::Segnn => ModelConfig::Segnn(SegnnConfig {
            hidden: args
                .hidden
                .parse()
                .map_err(|e| CliError::Usage(format!("--hidden: {e}")))?,
            layers_per_scale: args.layers,
            ..SegnnConfig::default()
        }),
        ModelKind::Baseline => ModelConfig::Baseline(BaselineConfig {
            width: args.width,
            layers_per_scale: args.layers,
            ..BaselineConfig::default()
        }),
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

/// Network inputs for the samples at `indices`.
pub(crate) fn prepare(
    model: &ModelConfig,
    graph: &GraphConfig,
    data: &Dataset,
    indices: &[usize],
) -> Result<Vec<TrainSample>, CliError> {
    let pairs: Vec<_> = indices
        .iter()
        .map(|&i| (&data.samples[i].mesh, &data.samples[i].field))
        .collect();
    Ok(prepare_samples(model, graph, &pairs)?)
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let run = Run::start("train");
    let model = model_config(args)?;
    let graph = GraphConfig {
        k: args.k,
        ratios: (args.ratio1, args.ratio2),
    };
    let config = TrainConfig {
        learning_rate: args.lr,
        batch_size: args.batch_size,
        max_epochs: args.epochs,
        patience: args.patience,
        seed: args.seed,
    };
    let data = load_dataset(&args.data)?;
    let train_set = prepare(&model, &graph, &data, &data.split.train)?;
    let val_set = prepare(&model, &graph, &data, &data.split.val)?;

    let net = Network::new(model.clone())?;
    let init = net.init_params(args.seed);
    eprintln!(
        "{}: {} parameters, {} training / {} validation meshes",
        model.name(),
        net.num_params(),
        train_set.len(),
        val_set.len()
    );
    let outcome = train_with_callback(&net, &train_set, &val_set, init, &config, |epoch, _| {
        if epoch % 10 == 0 {
            eprintln!("epoch {epoch}");
        }
        Ok(())
    })?;
    let last = outcome.history.last().expect("history holds epoch 0");
    println!(
        "best validation loss {:.6} at epoch {} of {}",
        outcome.history[outcome.best_epoch].val_loss, outcome.best_epoch, last.epoch
    );

    std::fs::create_dir_all(&args.out)?;
    let checkpoint = Checkpoint::new(model.clone(), graph, outcome.best.clone());
    let ckpt = write(&args.out, CHECKPOINT_FILE, &checkpoint.to_json()?)?;
    let loss = write(&args.out, LOSS_FILE, &outcome.history_csv())?;
    run.finish(
        &args.out,
        args.seed,
        serde_json::json!({
            "model": to_value(&model)?,
            "graph": to_value(&graph)?,
            "train": to_value(&config)?,
            "best_epoch": outcome.best_epoch,
        }),
        vec![manifest_path(&args.data)],
        vec![ckpt, loss],
    )
}

fn manifest_path(data: &Path) -> std::path::PathBuf {
    data.join(equiflow::synth::MANIFEST_FILE)
}

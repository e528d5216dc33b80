//! L1 loss, Adam and the training loop.

mod adam;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::l1_loss;
pub use trainer::{
    history_csv, mean_loss, prepare_samples, train, train_with_callback, EpochRecord, TrainConfig, TrainOutcome, TrainSample,
};

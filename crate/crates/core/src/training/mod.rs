//! Minibatch training loop and checkpoint files.

mod checkpoint;
mod trainer;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, TrainState,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use trainer::{
    fit_normalization, prepare_model, TrainConfig, TrainEvent, TrainSummary, Trainer,
};

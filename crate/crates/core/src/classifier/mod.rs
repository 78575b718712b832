//! From-scratch LSTM sequence classifier trained with backpropagation through
//! time and Adam.

mod adam;
mod checkpoint;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointMetadata, MODEL_MAGIC, MODEL_VERSION,
};
pub use model::{argmax, loss, softmax, Architecture, Layout, LstmClassifier, CLASSES, LOSS_FLOOR};
pub use train::{
    confidence_report, evaluate, hidden_activation_trace, train, write_loss_csv, write_trace_csv,
    ClassConfidence, Evaluation, StateClassifier, TrainConfig, TrainOutcome,
};

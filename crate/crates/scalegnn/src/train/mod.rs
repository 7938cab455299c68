//! Optimizer, model assembly, losses, metrics, training loop, and
//! cross-scale evaluation.

mod adam;
mod evaluate;
mod loss;
mod model;
mod postprocess;
mod trainer;

pub use adam::{adam_step, AdamState};
pub use evaluate::{evaluate, spearman, EvalOptions, EvalReport, MetricRow, TraceRow};
pub use loss::{
    accuracy_of_rounded, mean_absolute_error, mean_squared_error, relative_loss, LossKind,
};
pub use model::{Checkpoint, ControllerKind, Model, ModelSpec};
pub use postprocess::{path_postprocess, path_postprocess_batched, path_weight};
pub use trainer::{train, EpochStats, TrainConfig, TrainResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Layer(#[from] crate::nn::LayerError),
    #[error(transparent)]
    Iter(#[from] crate::iter::IterError),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Data(#[from] crate::tasks::DataError),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
    },
    #[error("{0}")]
    Invalid(String),
}

//! Learned layers: MLPs, message-passing blocks, pooling, and the
//! homogenize transform that strips everything scale-sensitive out of a
//! network so it can only represent positive homogeneous functions.

mod gn;
mod mlp;
mod params;

pub use gn::{
    bellman_ford_message_params, gn_forward, homogenize_gn, init_gn, readout, GnBinding,
    GnContext, GnDims, GnKind, GNBlockSpec,
};
pub use mlp::{
    bind_mlp, homogenize_mlp, homomlp_forward, init_mlp, mlp_forward, scale_invariant_softmax,
    Activation, BoundMlp, MLPSpec,
};
pub use params::{init_linear, BoundList, GradMap, ParamSet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LayerError {
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("parameter `{name}` has shape {got:?}, expected {expected:?}")]
    ParamShape {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("homogeneous mode forbids {0}")]
    NotHomogeneous(String),
    #[error("cannot homogenize {0}")]
    NonHomogenizable(String),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error("{0}")]
    Invalid(String),
}

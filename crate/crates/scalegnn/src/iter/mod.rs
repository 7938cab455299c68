//! Differentiable iterative controller with decaying confidence.
//!
//! The loop repeats a body function and asks a confidence function for a
//! halting probability after every step. The output is the expectation
//! of halting-time states: step j carries weight
//! `w_j = decay^(j-1) * c_j * prod_{i<j}(1 - c_i)`, and the loop runs
//! while the running continue-mass `decay^k * prod_{i<=k}(1 - c_i)`
//! stays above epsilon (or until the step cap, at which point all
//! remaining mass lands on the final state so the weights sum to one).
//!
//! Decay below one leaks a little mass per step, so the unassigned mass
//! `1 - sum(w_j)` never falls to zero on its own; that is what lets the
//! controller keep iterating thousands of steps at inference when the
//! confidence stays small, while the running mass still provides a crisp
//! halting signal the moment confidence spikes.
//!
//! Everything differentiates end to end: gradients reach both the states
//! `h^j` and the confidences `c^j` with no halting supervision.

mod control;

pub use control::{
    act_iterate, fixed_depth_shared, iterate, iterate_nodewise, iterate_streaming,
};

use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IterError {
    #[error("confidence {0} outside (0,1); a sigmoid is missing upstream")]
    ConfidenceRange(f64),
    #[error("confidence must have one value per segment ({expected}), got shape {got:?}")]
    ConfidenceShape { expected: usize, got: Vec<usize> },
    #[error("invalid iteration config: {0}")]
    Config(String),
    #[error(transparent)]
    Layer(#[from] crate::nn::LayerError),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterConfig {
    /// Halting threshold on the running continue-mass.
    pub epsilon: f64,
    /// Per-step decay of the continue-mass, in (0, 1].
    pub decay: f64,
    pub max_iter_train: usize,
    pub max_iter_eval: usize,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig {
            epsilon: 1e-4,
            decay: 0.9999,
            max_iter_train: 30,
            max_iter_eval: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterMode {
    Train,
    Eval,
}

impl IterConfig {
    pub fn validate(&self) -> Result<(), IterError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(IterError::Config(format!(
                "epsilon {} outside (0,1)",
                self.epsilon
            )));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(IterError::Config(format!(
                "decay {} outside (0,1]",
                self.decay
            )));
        }
        if self.max_iter_train == 0 || self.max_iter_eval == 0 {
            return Err(IterError::Config("iteration caps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn cap(&self, mode: IterMode) -> usize {
        match mode {
            IterMode::Train => self.max_iter_train,
            IterMode::Eval => self.max_iter_eval,
        }
    }
}

/// Maps hidden rows to halting segments. One segment per graph gives the
/// whole-graph controller; one segment per row gives the node-wise one.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub row_ids: Rc<Vec<usize>>,
    pub num_segments: usize,
}

impl Segmentation {
    /// All rows halt together.
    pub fn single(rows: usize) -> Self {
        Segmentation {
            row_ids: Rc::new(vec![0; rows]),
            num_segments: 1,
        }
    }

    /// Every row halts on its own schedule.
    pub fn per_row(rows: usize) -> Self {
        Segmentation {
            row_ids: Rc::new((0..rows).collect()),
            num_segments: 1.max(rows),
        }
    }

    pub fn from_graph_ids(ids: &[usize], num_graphs: usize) -> Self {
        Segmentation {
            row_ids: Rc::new(ids.to_vec()),
            num_segments: num_graphs,
        }
    }
}

/// Per-run record of one controller invocation.
#[derive(Debug, Clone)]
pub struct IterTrace {
    /// Steps the loop executed (max over segments).
    pub steps: usize,
    /// Confidence per step per segment, `[steps][segments]`.
    pub confidences: Vec<Vec<f64>>,
    /// Output weight per step per segment, `[steps][segments]`.
    pub weights: Vec<Vec<f64>>,
    /// First step at which each segment's continue-mass crossed epsilon
    /// (or the cap).
    pub halt_step: Vec<usize>,
    pub forced_halt: Vec<bool>,
    /// Total output weight per segment; exactly 1.0 on forced halt.
    pub weight_sum: Vec<f64>,
    /// Unassigned probability mass per segment (decay leak plus leftover
    /// continue-mass), tracked incrementally so `weight_sum + residual`
    /// reconstructs 1 independently of the weights themselves.
    pub residual: Vec<f64>,
}

impl IterTrace {
    pub fn segments(&self) -> usize {
        self.halt_step.len()
    }
}

/// Unassigned mass `1 - sum w_j` after `k` steps of the weight recurrence
/// with constant confidence, computed directly. With decay 1 this is the
/// bare continue-mass and crosses any epsilon; with decay below 1 it
/// converges to a positive floor, which is why decayed runs can keep
/// iterating long after an undecayed run would have halted.
pub fn constant_confidence_residual(confidence: f64, decay: f64, steps: usize) -> f64 {
    let mut running = 1.0f64;
    let mut assigned = 0.0f64;
    for _ in 0..steps {
        assigned += running * confidence;
        running *= decay * (1.0 - confidence);
    }
    1.0 - assigned
}

//! Task-specific sample encoding, dataset generation, and serialization.

mod encode;
mod io;

pub use encode::{
    generate_dataset, make_component_sample, make_navigation_sample, make_physics_sample,
    make_shortest_path_sample, make_tsp_sample, set_endpoint_onehots, shortest_path_endpoints,
};
pub use io::{read_dataset, scale_sample, spot_check_targets, write_dataset};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GeneratorKind, Graph};
use crate::mix_seed;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Oracle(#[from] crate::oracles::OracleError),
    #[error("io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("sample {index} failed verification: {message}")]
    Verification { index: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ShortestPath,
    ComponentCounting,
    Tsp,
    Physics,
    Navigation,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::ShortestPath => "shortest_path",
            TaskKind::ComponentCounting => "component_counting",
            TaskKind::Tsp => "tsp",
            TaskKind::Physics => "physics",
            TaskKind::Navigation => "navigation",
        }
    }
}

/// Regression target: one scalar per graph, or vectors on selected nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Scalar(f64),
    PerNode {
        nodes: Vec<usize>,
        values: Vec<Vec<f64>>,
    },
}

impl Target {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Target::Scalar(v) => Some(*v),
            Target::PerNode { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Target::Scalar(v) => v.is_finite(),
            Target::PerNode { values, .. } => {
                values.iter().all(|v| v.iter().all(|x| x.is_finite()))
            }
        }
    }
}

/// Scale descriptors carried with every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub size: usize,
    pub diameter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_range: Option<(f64, f64)>,
    pub approximate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_node: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSample {
    pub graph: Graph,
    pub target: Target,
    pub task: TaskKind,
    pub meta: SampleMeta,
}

/// Declarative dataset description; generation is a deterministic
/// function of this struct plus the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub task: TaskKind,
    pub generator: GeneratorKind,
    /// Node-count range `[n_min, n_max)`; grid side for navigation,
    /// ball count for physics, point count for tsp.
    pub n_min: usize,
    pub n_max: usize,
    pub weighted: bool,
    pub weight_min: f64,
    pub weight_max: f64,
    pub count: usize,
    pub master_seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_min < 2 || self.n_max <= self.n_min {
            return Err(DataError::Invalid(format!(
                "node range [{}, {}) needs n_min >= 2 and n_max > n_min",
                self.n_min, self.n_max
            )));
        }
        if self.weighted && !(self.weight_min > 0.0 && self.weight_max > self.weight_min) {
            return Err(DataError::Invalid(format!(
                "weight range [{}, {}) must be positive and non-empty",
                self.weight_min, self.weight_max
            )));
        }
        if self.count == 0 {
            return Err(DataError::Invalid("sample count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Dataset split with its own derived seed stream, so train/val/test
/// never share samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Split::Train => 0x7261_494e,
            Split::Val => 0x5641_4c69,
            Split::Test => 0x5445_5354,
        }
    }
}

/// Seed for one split's sample stream.
pub fn split_seed(master: u64, split: Split) -> u64 {
    mix_seed(master, split.stream_tag())
}

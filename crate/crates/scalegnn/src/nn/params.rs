//! Named parameter storage with exact JSON round-tripping.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LayerError;
use crate::tensor::Tensor;

/// Parameters bound onto an executor during one forward pass, so
/// gradients can be collected back by name afterwards.
pub type BoundList<V> = Vec<(String, V)>;

/// Accumulated gradients keyed by parameter path.
pub type GradMap = BTreeMap<String, Tensor>;

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Parameter collection addressed by stable string paths
/// (`module/layer/index` style). Iteration order is the sorted path
/// order, which keeps optimizer updates deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    params: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.params.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, LayerError> {
        self.params
            .get(name)
            .ok_or_else(|| LayerError::MissingParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, LayerError> {
        self.params
            .get_mut(name)
            .ok_or_else(|| LayerError::MissingParam(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    /// Total scalar count across all parameters.
    pub fn numel(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    /// Serialize to JSON; floats use shortest-round-trip formatting, so
    /// `from_json(to_json(p)) == p` bit for bit.
    pub fn to_json(&self) -> String {
        let stored: BTreeMap<&String, StoredTensor> = self
            .params
            .iter()
            .map(|(k, v)| {
                (
                    k,
                    StoredTensor {
                        shape: v.shape().to_vec(),
                        data: v.data().to_vec(),
                    },
                )
            })
            .collect();
        serde_json::to_string(&stored).expect("parameter maps serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, LayerError> {
        let stored: BTreeMap<String, StoredTensor> = serde_json::from_str(text)
            .map_err(|e| LayerError::Invalid(format!("parameter json: {e}")))?;
        let mut out = ParamSet::new();
        for (name, t) in stored {
            let tensor = Tensor::new(t.shape, t.data)
                .map_err(|e| LayerError::Invalid(format!("parameter `{name}`: {e}")))?;
            out.insert(name, tensor);
        }
        Ok(out)
    }
}

/// Uniform init in `[-sqrt(1/fan_in), +sqrt(1/fan_in)]`.
pub fn init_linear(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let bound = (1.0 / fan_in as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    Tensor::matrix(fan_in, fan_out, data).expect("sized by construction")
}

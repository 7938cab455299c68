//! Multilayer perceptrons, their bias-free homogeneous variant, and the
//! scale-invariant softmax used by homogeneous attention.

use std::rc::Rc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{init_linear, BoundList, ParamSet};
use super::LayerError;
use crate::tensor::{Executor, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu { slope: f64 },
    Sigmoid,
}

impl Activation {
    pub fn is_homogeneous(self) -> bool {
        matches!(self, Activation::Relu | Activation::LeakyRelu { .. })
    }

    pub fn apply<E: Executor>(self, ex: &mut E, x: &E::V) -> E::V {
        match self {
            Activation::Relu => ex.relu(x),
            Activation::LeakyRelu { slope } => ex.leaky_relu(x, slope),
            Activation::Sigmoid => ex.sigmoid(x),
        }
    }
}

/// Layer widths plus activation policy. `widths` runs input, hidden...,
/// output; the activation sits after every layer except the last, which
/// gets `final_activation` if set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLPSpec {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub use_bias: bool,
    pub final_activation: Option<Activation>,
}

impl MLPSpec {
    pub fn new(widths: Vec<usize>, activation: Activation, use_bias: bool) -> Self {
        MLPSpec {
            widths,
            activation,
            use_bias,
            final_activation: None,
        }
    }

    pub fn with_final(mut self, act: Activation) -> Self {
        self.final_activation = Some(act);
        self
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("at least two widths")
    }

    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// True when this spec can only represent homogeneous functions.
    pub fn is_homogeneous(&self) -> bool {
        !self.use_bias
            && self.activation.is_homogeneous()
            && self.final_activation.map_or(true, |a| a.is_homogeneous())
    }

    fn check(&self) -> Result<(), LayerError> {
        if self.widths.len() < 2 {
            return Err(LayerError::Invalid(format!(
                "mlp needs input and output widths, got {:?}",
                self.widths
            )));
        }
        Ok(())
    }
}

/// Bias-free spec with homogeneous activations only; errors name the
/// offending element instead of silently fixing sigmoids.
pub fn homogenize_mlp(spec: &MLPSpec) -> Result<MLPSpec, LayerError> {
    if spec.activation == Activation::Sigmoid {
        return Err(LayerError::NonHomogenizable("sigmoid activation".into()));
    }
    if spec.final_activation == Some(Activation::Sigmoid) {
        return Err(LayerError::NonHomogenizable("sigmoid head".into()));
    }
    Ok(MLPSpec {
        widths: spec.widths.clone(),
        activation: spec.activation,
        use_bias: false,
        final_activation: spec.final_activation,
    })
}

/// Per-layer weight (and optional bias) handles for one forward pass.
pub struct BoundMlp<V> {
    layers: Vec<(V, Option<V>)>,
}

pub fn init_mlp(rng: &mut ChaCha8Rng, pset: &mut ParamSet, spec: &MLPSpec, prefix: &str) {
    for i in 0..spec.layers() {
        let (fan_in, fan_out) = (spec.widths[i], spec.widths[i + 1]);
        pset.insert(format!("{prefix}/{i}/w"), init_linear(rng, fan_in, fan_out));
        if spec.use_bias {
            let bound = (1.0 / fan_in as f64).sqrt();
            let data = (0..fan_out)
                .map(|_| rand::Rng::gen_range(rng, -bound..bound))
                .collect();
            pset.insert(
                format!("{prefix}/{i}/b"),
                Tensor::matrix(1, fan_out, data).expect("sized"),
            );
        }
    }
}

pub fn bind_mlp<E: Executor>(
    ex: &mut E,
    pset: &ParamSet,
    spec: &MLPSpec,
    prefix: &str,
    bound: &mut BoundList<E::V>,
) -> Result<BoundMlp<E::V>, LayerError> {
    spec.check()?;
    let mut layers = Vec::with_capacity(spec.layers());
    for i in 0..spec.layers() {
        let wname = format!("{prefix}/{i}/w");
        let w = pset.get(&wname)?;
        let expected = [spec.widths[i], spec.widths[i + 1]];
        if w.shape() != expected {
            return Err(LayerError::ParamShape {
                name: wname,
                expected: expected.to_vec(),
                got: w.shape().to_vec(),
            });
        }
        let wv = ex.leaf(w.clone());
        bound.push((wname, wv.clone()));
        let bv = if spec.use_bias {
            let bname = format!("{prefix}/{i}/b");
            let b = pset.get(&bname)?;
            let v = ex.leaf(b.clone());
            bound.push((bname, v.clone()));
            Some(v)
        } else {
            None
        };
        layers.push((wv, bv));
    }
    Ok(BoundMlp { layers })
}

/// Rows of `x` map independently through alternating linear (or affine)
/// layers and activations.
pub fn mlp_forward<E: Executor>(
    ex: &mut E,
    spec: &MLPSpec,
    mlp: &BoundMlp<E::V>,
    x: &E::V,
) -> Result<E::V, LayerError> {
    let mut h = x.clone();
    for (i, (w, b)) in mlp.layers.iter().enumerate() {
        h = ex.matmul(&h, w)?;
        if let Some(b) = b {
            h = ex.add_bias(&h, b)?;
        }
        let act = if i + 1 < mlp.layers.len() {
            Some(spec.activation)
        } else {
            spec.final_activation
        };
        if let Some(act) = act {
            h = act.apply(ex, &h);
        }
    }
    Ok(h)
}

/// Forward pass that additionally enforces the homogeneous-mode invariant
/// (no biases, homogeneous activations), so the output satisfies
/// `F(lambda x) = lambda F(x)` for all lambda > 0.
pub fn homomlp_forward<E: Executor>(
    ex: &mut E,
    spec: &MLPSpec,
    mlp: &BoundMlp<E::V>,
    x: &E::V,
) -> Result<E::V, LayerError> {
    if !spec.is_homogeneous() {
        return Err(LayerError::NotHomogeneous(
            "biases or a non-homogeneous activation".into(),
        ));
    }
    mlp_forward(ex, spec, mlp, x)
}

/// Softmax of per-segment scores normalized by their range, invariant
/// under positive scaling of the scores; an all-equal segment yields the
/// uniform distribution without dividing.
pub fn scale_invariant_softmax<E: Executor>(
    ex: &mut E,
    scores: &E::V,
    ids: &Rc<Vec<usize>>,
    segments: usize,
) -> Result<E::V, LayerError> {
    Ok(ex.segment_softmax(scores, ids, segments, true)?)
}

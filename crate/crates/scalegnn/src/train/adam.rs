//! Adam with bias correction.

use std::collections::BTreeMap;

use crate::nn::{GradMap, ParamSet};
use crate::tensor::Tensor;

use super::TrainError;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Per-parameter first/second moment estimates plus the step counter.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    moments: BTreeMap<String, (Tensor, Tensor)>,
    pub step: u64,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// One update over every parameter; parameters without a gradient this
/// step keep their moment decay (gradient zero).
pub fn adam_step(
    params: &mut ParamSet,
    grads: &GradMap,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), TrainError> {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - BETA1.powi(t);
    let bc2 = 1.0 - BETA2.powi(t);
    for (name, value) in params.iter_mut() {
        let (m, v) = state
            .moments
            .entry(name.clone())
            .or_insert_with(|| {
                (
                    Tensor::zeros(value.shape().to_vec()),
                    Tensor::zeros(value.shape().to_vec()),
                )
            });
        if let Some(g) = grads.get(name) {
            if !g.same_shape(value) {
                return Err(TrainError::Invalid(format!(
                    "gradient shape {:?} for parameter `{name}` with shape {:?}",
                    g.shape(),
                    value.shape()
                )));
            }
        }
        let zero = Tensor::zeros(value.shape().to_vec());
        let g = grads.get(name).unwrap_or(&zero);
        let (md, vd) = (m.data_mut(), v.data_mut());
        let out = value.data_mut();
        for i in 0..out.len() {
            let gi = g.data()[i];
            md[i] = BETA1 * md[i] + (1.0 - BETA1) * gi;
            vd[i] = BETA2 * vd[i] + (1.0 - BETA2) * gi * gi;
            let m_hat = md[i] / bc1;
            let v_hat = vd[i] / bc2;
            out[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
    Ok(())
}

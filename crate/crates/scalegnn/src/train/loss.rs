//! Losses and scalar metrics.

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::graph::GraphBatch;
use crate::tasks::{TaskSample, Target};
use crate::tensor::{Executor, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean absolute error; keeps the error homogeneous in the target
    /// scale, matching the scale-generalization analysis.
    Mae,
    /// Mean squared error (physics).
    Mse,
}

impl LossKind {
    pub fn for_task(task: crate::tasks::TaskKind) -> Self {
        match task {
            crate::tasks::TaskKind::Physics => LossKind::Mse,
            _ => LossKind::Mae,
        }
    }
}

/// `|y - y_hat| / |y|`; the scale-invariant regression metric.
pub fn relative_loss(y: f64, y_hat: f64) -> Result<f64, TrainError> {
    if y == 0.0 {
        return Err(TrainError::Invalid(
            "relative loss undefined for zero target".into(),
        ));
    }
    Ok((y - y_hat).abs() / y.abs())
}

pub fn mean_absolute_error(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|(y, p)| (y - p).abs()).sum::<f64>() / pairs.len() as f64
}

pub fn mean_squared_error(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|(y, p)| (y - p) * (y - p)).sum::<f64>() / pairs.len() as f64
}

/// Fraction of predictions whose nearest integer equals the target.
pub fn accuracy_of_rounded(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs
        .iter()
        .filter(|(y, p)| p.round() == *y)
        .count() as f64
        / pairs.len() as f64
}

/// Target tensor aligned with a model prediction over a batch: `[G,1]`
/// for scalar tasks, or (row indices, `[rows, d]`) for per-node tasks.
pub fn batch_targets(
    batch: &GraphBatch,
    samples: &[TaskSample],
) -> Result<(Option<Vec<usize>>, Tensor), TrainError> {
    let per_node = samples
        .first()
        .map(|s| matches!(s.target, Target::PerNode { .. }))
        .unwrap_or(false);
    if !per_node {
        let mut data = Vec::with_capacity(samples.len());
        for s in samples {
            data.push(s.target.scalar().ok_or_else(|| {
                TrainError::Invalid("mixed scalar and per-node targets".into())
            })?);
        }
        return Ok((None, Tensor::matrix(samples.len(), 1, data).expect("sized")));
    }
    let mut rows = Vec::new();
    let mut data = Vec::new();
    let mut width = None;
    for (g, s) in samples.iter().enumerate() {
        let Target::PerNode { nodes, values } = &s.target else {
            return Err(TrainError::Invalid(
                "mixed scalar and per-node targets".into(),
            ));
        };
        for (node, value) in nodes.iter().zip(values) {
            rows.push(batch.node_offsets[g] + node);
            if let Some(w) = width {
                if w != value.len() {
                    return Err(TrainError::Invalid("ragged per-node targets".into()));
                }
            }
            width = Some(value.len());
            data.extend_from_slice(value);
        }
    }
    let w = width.unwrap_or(0);
    let t = Tensor::new(vec![rows.len(), w], data)
        .map_err(|e| TrainError::Invalid(e.to_string()))?;
    Ok((Some(rows), t))
}

/// Tape-side training loss for one batch.
pub fn batch_loss<E: Executor>(
    ex: &mut E,
    pred: &E::V,
    batch: &GraphBatch,
    samples: &[TaskSample],
    kind: LossKind,
) -> Result<E::V, TrainError> {
    let (rows, target) = batch_targets(batch, samples)?;
    let count = target.numel().max(1) as f64;
    let tv = ex.leaf(target);
    let compared = match rows {
        Some(rows) => {
            let idx = std::rc::Rc::new(rows);
            ex.gather_rows(pred, &idx)?
        }
        None => pred.clone(),
    };
    let diff = ex.sub(&compared, &tv)?;
    let per_elem = match kind {
        LossKind::Mae => ex.abs(&diff),
        LossKind::Mse => ex.mul(&diff, &diff)?,
    };
    let total = ex.sum_all(&per_elem);
    Ok(ex.affine(&total, 1.0 / count, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_loss_cases() {
        assert_eq!(relative_loss(4.0, 4.0).unwrap(), 0.0);
        assert_eq!(relative_loss(4.0, 2.0).unwrap(), 0.5);
        assert!(relative_loss(0.0, 1.0).is_err());
        // ratio is invariant under joint scaling
        let a = relative_loss(3.7, 2.9).unwrap();
        let b = relative_loss(3.7 * 64.0, 2.9 * 64.0).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn rounding_accuracy() {
        let pairs = [(3.0, 3.2), (2.0, 2.6), (5.0, 4.9)];
        assert!((accuracy_of_rounded(&pairs) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn error_means() {
        let pairs = [(1.0, 2.0), (0.0, -2.0)];
        assert_eq!(mean_absolute_error(&pairs), 1.5);
        assert_eq!(mean_squared_error(&pairs), 2.5);
    }
}

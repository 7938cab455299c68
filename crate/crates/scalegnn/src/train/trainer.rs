//! Mini-batch training with epoch-grid validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::evaluate::{evaluate, EvalOptions};
use super::loss::{batch_loss, LossKind};
use super::model::{Checkpoint, Model};
use super::TrainError;
use crate::graph::batch;
use crate::iter::IterMode;
use crate::mix_seed;
use crate::nn::{GradMap, ParamSet};
use crate::tasks::{TaskKind, TaskSample};
use crate::tensor::{Executor, Tape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Epochs at which validation runs; training continues to the
    /// largest entry and the best-validation checkpoint wins.
    pub epoch_grid: Vec<usize>,
    pub loss: LossKind,
    pub seed: u64,
}

impl TrainConfig {
    /// Default hyper-parameters: lr 0.001, batch 32, epoch grid
    /// 20,40,...,200.
    pub fn paper_defaults(task: TaskKind) -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            epoch_grid: (1..=10).map(|k| 20 * k).collect(),
            loss: LossKind::for_task(task),
            seed: 0,
        }
    }

    /// Same optimizer settings with a short validation grid.
    pub fn desk(task: TaskKind, max_epochs: usize, seed: u64) -> Self {
        let step = (max_epochs / 5).max(1);
        let mut grid: Vec<usize> = (1..=5).map(|k| (step * k).min(max_epochs)).collect();
        grid.dedup();
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            epoch_grid: grid,
            loss: LossKind::for_task(task),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate <= 0.0 || self.batch_size == 0 || self.epoch_grid.is_empty() {
            return Err(TrainError::Invalid(
                "learning rate, batch size, and epoch grid must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// Validation score (lower is better) at grid epochs.
    pub val_score: Option<f64>,
}

#[derive(Debug)]
pub struct TrainResult {
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochStats>,
}

/// Validation score with lower-is-better orientation.
fn validation_score(
    model: &Model,
    params: &ParamSet,
    val: &[TaskSample],
) -> Result<f64, TrainError> {
    let report = evaluate(model, params, val, "val", &EvalOptions::default())?;
    let score = match model.spec.task {
        TaskKind::ComponentCounting => 1.0 - report.metric("accuracy").unwrap_or(0.0),
        TaskKind::Physics => report.metric("mse").unwrap_or(f64::INFINITY),
        _ => report.metric("relative_loss").unwrap_or(f64::INFINITY),
    };
    Ok(score)
}

/// Train with Adam over shuffled mini-batches (disjoint-union graphs),
/// validating at every grid epoch and keeping the best checkpoint.
pub fn train(
    model: &Model,
    initial: ParamSet,
    train_set: &[TaskSample],
    val_set: &[TaskSample],
    cfg: &TrainConfig,
) -> Result<TrainResult, TrainError> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::Invalid("empty training set".into()));
    }
    let mut params = initial;
    let mut adam = AdamState::new();
    let max_epoch = *cfg.epoch_grid.iter().max().expect("non-empty grid");
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ParamSet)> = None;

    for epoch in 1..=max_epoch {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for (batch_index, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let members: Vec<TaskSample> =
                chunk.iter().map(|&i| train_set[i].clone()).collect();
            let graphs: Vec<_> = members.iter().map(|s| s.graph.clone()).collect();
            let b = batch(&graphs)?;
            let mut tape = Tape::new();
            let mut bound = Vec::new();
            let (pred, _) = model.forward(&mut tape, &params, &b, IterMode::Train, &mut bound)?;
            let loss = batch_loss(&mut tape, &pred, &b, &members, cfg.loss)?;
            let loss_value = tape.value(&loss).item();
            if !loss_value.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    batch: batch_index,
                    loss: loss_value,
                });
            }
            epoch_loss += loss_value * members.len() as f64;

            let grads = tape.backward(loss)?;
            let mut grad_map = GradMap::new();
            for (name, var) in &bound {
                if let Some(g) = grads.get(*var) {
                    match grad_map.get_mut(name) {
                        Some(acc) => {
                            for (a, d) in acc.data_mut().iter_mut().zip(g.data()) {
                                *a += d;
                            }
                        }
                        None => {
                            grad_map.insert(name.clone(), g.clone());
                        }
                    }
                }
            }
            adam_step(&mut params, &grad_map, &mut adam, cfg.learning_rate)?;
        }

        let train_loss = epoch_loss / train_set.len() as f64;
        let val_score = if cfg.epoch_grid.contains(&epoch) && !val_set.is_empty() {
            let score = validation_score(model, &params, val_set)?;
            if best.as_ref().map_or(true, |(b, _, _)| score < *b) {
                best = Some((score, epoch, params.clone()));
            }
            Some(score)
        } else {
            None
        };
        history.push(EpochStats {
            epoch,
            train_loss,
            val_score,
        });
    }

    let (val_metric, best_epoch, best_params) = match best {
        Some((s, e, p)) => (s, e, p),
        None => (f64::NAN, max_epoch, params),
    };
    Ok(TrainResult {
        checkpoint: Checkpoint {
            model: model.spec.clone(),
            params: best_params,
            best_epoch,
            val_metric,
        },
        history,
    })
}

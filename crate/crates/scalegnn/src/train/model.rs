//! Model assembly: embedding, controller-wrapped message passing,
//! readout, and prediction head.

use std::rc::Rc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::graph::GraphBatch;
use crate::iter::{
    act_iterate, fixed_depth_shared, iterate, iterate_streaming, IterConfig, IterError, IterMode,
    IterTrace, Segmentation,
};
use crate::nn::{
    bind_mlp, gn_forward, init_gn, init_mlp, mlp_forward, readout, Activation, BoundList,
    GNBlockSpec, GnBinding, GnContext, GnDims, GnKind, MLPSpec, ParamSet,
};
use crate::tasks::TaskKind;
use crate::tensor::{Executor, Immediate, Reduce, Tensor};

/// Keeps sigmoid outputs strictly inside (0,1) even when saturated.
const CONFIDENCE_GUARD: f64 = 1e-7;

/// How message-passing sweeps are composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerKind {
    /// Adaptive halting, one confidence per graph.
    Iter,
    /// Adaptive halting, one confidence per node.
    IterNodewise,
    /// Adaptive-computation-time baseline.
    Act,
    /// `depth` independent layers applied in sequence.
    Stacked { depth: usize },
    /// One layer repeated `depth` times.
    Shared { depth: usize },
}

impl ControllerKind {
    pub fn is_adaptive(self) -> bool {
        matches!(
            self,
            ControllerKind::Iter | ControllerKind::IterNodewise | ControllerKind::Act
        )
    }
}

/// Complete architecture description; together with a [`ParamSet`] this
/// determines the function exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub task: TaskKind,
    pub hidden: usize,
    pub core: GnKind,
    pub controller: ControllerKind,
    /// Homogeneous prior on embedding, core, readout, and head. The
    /// confidence head always keeps its sigmoid.
    pub homogeneous: bool,
    /// Apply the prior only to the core blocks; used when the target
    /// function itself is not homogeneous (component counting).
    pub core_only_homogeneous: bool,
    /// Sequential controller cores (component counting stacks two).
    pub stack: usize,
    pub readout: Reduce,
    pub input_concat: bool,
    pub iter: IterConfig,
}

impl ModelSpec {
    pub fn for_task(task: TaskKind, core: GnKind, controller: ControllerKind) -> Self {
        let counting = task == TaskKind::ComponentCounting;
        ModelSpec {
            task,
            hidden: 64,
            core,
            controller,
            homogeneous: false,
            core_only_homogeneous: false,
            stack: if counting { 2 } else { 1 },
            readout: if counting { Reduce::Sum } else { Reduce::Max },
            input_concat: true,
            iter: IterConfig::default(),
        }
    }

    /// Apply the homogeneous prior. For tasks with non-homogeneous
    /// targets the prior is restricted to the core blocks.
    pub fn homogenized(mut self) -> Self {
        if self.task == TaskKind::ComponentCounting {
            self.core_only_homogeneous = true;
        } else {
            self.homogeneous = true;
        }
        self
    }

    pub fn node_dim(&self) -> usize {
        match self.task {
            TaskKind::ShortestPath => 3,
            TaskKind::ComponentCounting => 1,
            TaskKind::Tsp => 2,
            TaskKind::Physics => 2,
            TaskKind::Navigation => 4,
        }
    }

    pub fn edge_dim(&self) -> usize {
        1
    }

    /// Output values per prediction row (graphs, or nodes for physics).
    pub fn output_dim(&self) -> usize {
        match self.task {
            TaskKind::Physics => 2,
            _ => 1,
        }
    }

    pub fn per_node_output(&self) -> bool {
        self.task == TaskKind::Physics
    }

    fn fully_homogeneous(&self) -> bool {
        self.homogeneous && !self.core_only_homogeneous
    }

    fn embed_spec(&self) -> MLPSpec {
        MLPSpec::new(
            vec![self.node_dim(), self.hidden, self.hidden],
            Activation::Relu,
            !self.fully_homogeneous(),
        )
    }

    fn head_spec(&self) -> MLPSpec {
        MLPSpec::new(
            vec![self.hidden, self.output_dim()],
            Activation::Relu,
            !self.fully_homogeneous(),
        )
    }

    fn conf_spec(&self) -> MLPSpec {
        MLPSpec::new(vec![self.hidden, self.hidden, 1], Activation::Relu, true)
            .with_final(Activation::Sigmoid)
    }

    pub fn block_spec(&self) -> GNBlockSpec {
        GNBlockSpec {
            kind: self.core,
            hidden: self.hidden,
            mlp_hidden: self.hidden,
            homogeneous: self.homogeneous || self.core_only_homogeneous,
            input_concat: self.input_concat,
        }
    }

    fn dims(&self) -> GnDims {
        GnDims {
            node_attrs: if self.input_concat { self.node_dim() } else { 0 },
            edge_attrs: self.edge_dim(),
        }
    }

    fn layers_per_core(&self) -> usize {
        match self.controller {
            ControllerKind::Stacked { depth } => depth,
            _ => 1,
        }
    }

    pub fn init_params(&self, seed: u64) -> ParamSet {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pset = ParamSet::new();
        init_mlp(&mut rng, &mut pset, &self.embed_spec(), "embed");
        let block = self.block_spec();
        for s in 0..self.stack {
            for l in 0..self.layers_per_core() {
                init_gn(&mut rng, &mut pset, &block, self.dims(), &format!("core/{s}/{l}"));
            }
            if self.controller.is_adaptive() {
                init_mlp(&mut rng, &mut pset, &self.conf_spec(), &format!("conf/{s}"));
                // start the halting head unconfident (~0.12) so early
                // training unrolls to the cap; a head that halts at step
                // one never sees gradients about later steps and cannot
                // recover
                let last = self.conf_spec().layers() - 1;
                pset.insert(
                    format!("conf/{s}/{last}/w"),
                    Tensor::zeros(vec![self.hidden, 1]),
                );
                pset.insert(
                    format!("conf/{s}/{last}/b"),
                    Tensor::matrix(1, 1, vec![-2.0]).expect("scalar bias"),
                );
            }
        }
        init_mlp(&mut rng, &mut pset, &self.head_spec(), "head");
        pset
    }
}

struct CoreBindings<V> {
    blocks: Vec<GnBinding<V>>,
    conf: Option<crate::nn::BoundMlp<V>>,
}

fn bind_core<E: Executor>(
    spec: &ModelSpec,
    ex: &mut E,
    params: &ParamSet,
    core_index: usize,
    bound: &mut BoundList<E::V>,
) -> Result<CoreBindings<E::V>, TrainError> {
    let block = spec.block_spec();
    let mut blocks = Vec::new();
    for l in 0..spec.layers_per_core() {
        blocks.push(block.bind(
            ex,
            params,
            spec.dims(),
            &format!("core/{core_index}/{l}"),
            bound,
        )?);
    }
    let conf = if spec.controller.is_adaptive() {
        Some(bind_mlp(
            ex,
            params,
            &spec.conf_spec(),
            &format!("conf/{core_index}"),
            bound,
        )?)
    } else {
        None
    };
    Ok(CoreBindings { blocks, conf })
}

/// Squash a sigmoid output into `[guard, 1-guard]` so saturated heads
/// still satisfy the controller's open-interval contract.
fn guard_confidence<E: Executor>(ex: &mut E, c: &E::V) -> E::V {
    ex.affine(c, 1.0 - 2.0 * CONFIDENCE_GUARD, CONFIDENCE_GUARD)
}

/// A task model: spec plus forward passes. Parameters live outside so
/// the same model can run with trained or hand-set values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Model {
    pub spec: ModelSpec,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Self {
        Model { spec }
    }

    /// Forward pass on any executor (tape for training). Returns the
    /// prediction (`[G,1]`, or `[N,out]` for per-node tasks) and one
    /// trace per adaptive controller core.
    pub fn forward<E: Executor>(
        &self,
        ex: &mut E,
        params: &ParamSet,
        batch: &GraphBatch,
        mode: IterMode,
        bound: &mut BoundList<E::V>,
    ) -> Result<(E::V, Vec<IterTrace>), TrainError> {
        let attrs = ex.leaf(batch.graph.node_attrs.clone());
        self.forward_with_attrs(ex, params, batch, &attrs, mode, bound)
    }

    /// Forward pass with the node attributes supplied as an existing
    /// executor value, so callers can differentiate the whole model with
    /// respect to its inputs.
    pub fn forward_with_attrs<E: Executor>(
        &self,
        ex: &mut E,
        params: &ParamSet,
        batch: &GraphBatch,
        attrs: &E::V,
        mode: IterMode,
        bound: &mut BoundList<E::V>,
    ) -> Result<(E::V, Vec<IterTrace>), TrainError> {
        let spec = &self.spec;
        let embed_spec = spec.embed_spec();
        let embed = bind_mlp(ex, params, &embed_spec, "embed", bound)?;
        let mut h = mlp_forward(ex, &embed_spec, &embed, attrs)?;
        let mut ctx = GnContext::from_batch(ex, batch, false);
        if spec.input_concat {
            ctx.input_attrs = Some(attrs.clone());
        }
        let block = spec.block_spec();
        let graph_ids = Rc::new(batch.graph_ids.clone());
        let mut traces = Vec::new();

        for s in 0..spec.stack {
            let core = bind_core(spec, ex, params, s, bound)?;
            match spec.controller {
                ControllerKind::Stacked { .. } => {
                    for binding in &core.blocks {
                        h = gn_forward(ex, &block, binding, &ctx, &h)?;
                    }
                }
                ControllerKind::Shared { depth } => {
                    let binding = &core.blocks[0];
                    h = fixed_depth_shared(
                        ex,
                        |ex, h, _| gn_forward(ex, &block, binding, &ctx, h).map_err(IterError::from),
                        &h,
                        depth,
                    )?;
                }
                ControllerKind::Iter | ControllerKind::Act | ControllerKind::IterNodewise => {
                    let binding = &core.blocks[0];
                    let conf_spec = spec.conf_spec();
                    let conf = core.conf.as_ref().expect("adaptive cores bind a confidence head");
                    let nodewise = spec.controller == ControllerKind::IterNodewise;
                    let seg = if nodewise {
                        Segmentation::per_row(batch.graph.num_nodes)
                    } else {
                        Segmentation::from_graph_ids(&batch.graph_ids, batch.num_graphs)
                    };
                    let body = |ex: &mut E, h: &E::V, _k: usize| {
                        gn_forward(ex, &block, binding, &ctx, h).map_err(IterError::from)
                    };
                    let confidence = |ex: &mut E, h: &E::V, _k: usize| {
                        let pooled = if nodewise {
                            h.clone()
                        } else {
                            readout(ex, h, &graph_ids, batch.num_graphs, Reduce::Max)?
                        };
                        let c = mlp_forward(ex, &conf_spec, conf, &pooled)?;
                        Ok(guard_confidence(ex, &c))
                    };
                    let (out, trace) = if spec.controller == ControllerKind::Act {
                        act_iterate(ex, body, confidence, &h, &seg, &spec.iter, mode)?
                    } else {
                        iterate(ex, body, confidence, &h, &seg, &spec.iter, mode)?
                    };
                    h = out;
                    traces.push(trace);
                }
            }
        }

        let head_spec = spec.head_spec();
        let head = bind_mlp(ex, params, &head_spec, "head", bound)?;
        let pred = if spec.per_node_output() {
            mlp_forward(ex, &head_spec, &head, &h)?
        } else {
            let pooled = readout(ex, &h, &graph_ids, batch.num_graphs, spec.readout)?;
            mlp_forward(ex, &head_spec, &head, &pooled)?
        };
        Ok((pred, traces))
    }

    /// Inference-only forward. Adaptive cores run the single-pass
    /// streaming recurrence, so memory stays flat however many steps the
    /// controller takes.
    pub fn predict(
        &self,
        params: &ParamSet,
        batch: &GraphBatch,
    ) -> Result<(Tensor, Vec<IterTrace>), TrainError> {
        let spec = &self.spec;
        let mut ex = Immediate;
        let mut bound = Vec::new();
        if !matches!(
            spec.controller,
            ControllerKind::Iter | ControllerKind::IterNodewise
        ) {
            return self
                .forward(&mut ex, params, batch, IterMode::Eval, &mut bound)
                .map(|(p, t)| (p, t));
        }

        let embed_spec = spec.embed_spec();
        let embed = bind_mlp(&mut ex, params, &embed_spec, "embed", &mut bound)?;
        let attrs = ex.leaf(batch.graph.node_attrs.clone());
        let mut h = mlp_forward(&mut ex, &embed_spec, &embed, &attrs)?;
        let ctx = GnContext::from_batch(&mut ex, batch, spec.input_concat);
        let block = spec.block_spec();
        let graph_ids = Rc::new(batch.graph_ids.clone());
        let nodewise = spec.controller == ControllerKind::IterNodewise;
        let mut traces = Vec::new();

        for s in 0..spec.stack {
            let core = bind_core(spec, &mut ex, params, s, &mut bound)?;
            let binding = &core.blocks[0];
            let conf_spec = spec.conf_spec();
            let conf = core.conf.as_ref().expect("adaptive cores bind a confidence head");
            let seg = if nodewise {
                Segmentation::per_row(batch.graph.num_nodes)
            } else {
                Segmentation::from_graph_ids(&batch.graph_ids, batch.num_graphs)
            };
            let (out, trace) = iterate_streaming(
                |ex, h, _| gn_forward(ex, &block, binding, &ctx, h).map_err(IterError::from),
                |ex, h, _| {
                    let pooled = if nodewise {
                        h.clone()
                    } else {
                        readout(ex, h, &graph_ids, batch.num_graphs, Reduce::Max)?
                    };
                    let c = mlp_forward(ex, &conf_spec, conf, &pooled)?;
                    Ok(guard_confidence(ex, &c))
                },
                &h,
                &seg,
                &spec.iter,
            )?;
            h = out;
            traces.push(trace);
        }

        let head_spec = spec.head_spec();
        let head = bind_mlp(&mut ex, params, &head_spec, "head", &mut bound)?;
        let pred = if spec.per_node_output() {
            mlp_forward(&mut ex, &head_spec, &head, &h)?
        } else {
            let pooled = readout(&mut ex, &h, &graph_ids, batch.num_graphs, spec.readout)?;
            mlp_forward(&mut ex, &head_spec, &head, &pooled)?
        };
        Ok((pred, traces))
    }
}

/// Trained model artifact: spec, parameters, and selection metadata.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: ModelSpec,
    pub params: ParamSet,
    pub best_epoch: usize,
    pub val_metric: f64,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let params: serde_json::Value =
            serde_json::from_str(&self.params.to_json()).expect("params serialize");
        serde_json::json!({
            "model": self.model,
            "params": params,
            "best_epoch": self.best_epoch,
            "val_metric": self.val_metric,
        })
        .to_string()
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| TrainError::Invalid(format!("checkpoint json: {e}")))?;
        let model: ModelSpec = serde_json::from_value(
            value
                .get("model")
                .cloned()
                .ok_or_else(|| TrainError::Invalid("checkpoint lacks `model`".into()))?,
        )
        .map_err(|e| TrainError::Invalid(format!("model spec: {e}")))?;
        let params = ParamSet::from_json(
            &value
                .get("params")
                .map(|p| p.to_string())
                .ok_or_else(|| TrainError::Invalid("checkpoint lacks `params`".into()))?,
        )?;
        Ok(Checkpoint {
            model,
            params,
            best_epoch: value.get("best_epoch").and_then(|v| v.as_u64()).unwrap_or(0) as usize,
            val_metric: value
                .get("val_metric")
                .and_then(|v| v.as_f64())
                .unwrap_or(f64::NAN),
        })
    }
}

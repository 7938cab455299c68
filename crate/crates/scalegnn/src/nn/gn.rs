//! Message-passing blocks.
//!
//! Every block maps node states `[N, hidden] -> [N, hidden]` over a graph
//! batch. The path-aligned kinds follow one relaxation sweep of the
//! textbook shortest-path recurrence: additive messages, a max-style
//! aggregation, and a monotone update, which is why a hand-set instance
//! reproduces the classical algorithm exactly (see
//! [`bellman_ford_message_params`]). Nodes with no incoming edges keep
//! their state unchanged.

use std::rc::Rc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{bind_mlp, init_mlp, mlp_forward, Activation, BoundMlp, MLPSpec};
use super::params::{init_linear, BoundList, ParamSet};
use super::LayerError;
use crate::graph::GraphBatch;
use crate::tensor::{EmptySegment, Executor, Reduce, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnKind {
    /// Additive-style message MLP, per-receiver max aggregation,
    /// elementwise max update.
    MpnnMax,
    /// Message and score MLPs, attentional aggregation, max update.
    PathGnn,
    /// Like PathGnn but the message sees only sender and edge attributes.
    PathGnnSim,
    /// Symmetric-normalized adjacency with self-loops, one linear layer.
    Gcn,
    /// Single-head attention over projected neighbours.
    Gat,
}

impl GnKind {
    pub fn name(self) -> &'static str {
        match self {
            GnKind::MpnnMax => "mpnn_max",
            GnKind::PathGnn => "pathgnn",
            GnKind::PathGnnSim => "pathgnn_sim",
            GnKind::Gcn => "gcn",
            GnKind::Gat => "gat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GNBlockSpec {
    pub kind: GnKind,
    pub hidden: usize,
    /// Hidden width of the internal message/score MLPs (usually equal to
    /// `hidden`).
    pub mlp_hidden: usize,
    /// Bias-free internals and scale-invariant attention.
    pub homogeneous: bool,
    /// Prepend the original node attributes to the hidden state before
    /// every message computation.
    pub input_concat: bool,
}

impl GNBlockSpec {
    pub fn new(kind: GnKind, hidden: usize) -> Self {
        GNBlockSpec {
            kind,
            hidden,
            mlp_hidden: hidden,
            homogeneous: false,
            input_concat: true,
        }
    }
}

/// Homogeneous twin of a block spec: every internal MLP drops its biases
/// and attention switches to the scale-invariant softmax. Idempotent.
pub fn homogenize_gn(spec: &GNBlockSpec) -> GNBlockSpec {
    GNBlockSpec {
        homogeneous: true,
        ..*spec
    }
}

/// Attribute widths the block is built against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnDims {
    /// Width of the original node attributes (used when input-concat is on).
    pub node_attrs: usize,
    pub edge_attrs: usize,
}

fn v_width(spec: &GNBlockSpec, dims: GnDims) -> usize {
    spec.hidden + if spec.input_concat { dims.node_attrs } else { 0 }
}

fn message_spec(spec: &GNBlockSpec, dims: GnDims) -> MLPSpec {
    let vw = v_width(spec, dims);
    MLPSpec::new(
        vec![2 * vw + dims.edge_attrs, spec.mlp_hidden, spec.hidden],
        Activation::Relu,
        !spec.homogeneous,
    )
}

fn message_spec_sim(spec: &GNBlockSpec, dims: GnDims) -> MLPSpec {
    let vw = v_width(spec, dims);
    MLPSpec::new(
        vec![vw + dims.edge_attrs, spec.mlp_hidden, spec.hidden],
        Activation::Relu,
        !spec.homogeneous,
    )
}

fn score_spec(spec: &GNBlockSpec, dims: GnDims) -> MLPSpec {
    let vw = v_width(spec, dims);
    MLPSpec::new(
        vec![2 * vw + dims.edge_attrs, spec.mlp_hidden, 1],
        Activation::Relu,
        !spec.homogeneous,
    )
}

fn gat_att_spec(spec: &GNBlockSpec, dims: GnDims) -> MLPSpec {
    let vw = v_width(spec, dims);
    MLPSpec::new(
        vec![2 * vw + dims.edge_attrs, 1],
        Activation::Relu,
        !spec.homogeneous,
    )
}

pub fn init_gn(
    rng: &mut ChaCha8Rng,
    pset: &mut ParamSet,
    spec: &GNBlockSpec,
    dims: GnDims,
    prefix: &str,
) {
    match spec.kind {
        GnKind::MpnnMax => init_mlp(rng, pset, &message_spec(spec, dims), &format!("{prefix}/msg")),
        GnKind::PathGnn => {
            init_mlp(rng, pset, &message_spec(spec, dims), &format!("{prefix}/msg"));
            init_mlp(rng, pset, &score_spec(spec, dims), &format!("{prefix}/score"));
        }
        GnKind::PathGnnSim => {
            init_mlp(rng, pset, &message_spec_sim(spec, dims), &format!("{prefix}/msg"));
            init_mlp(rng, pset, &score_spec(spec, dims), &format!("{prefix}/score"));
        }
        GnKind::Gcn => {
            let vw = v_width(spec, dims);
            pset.insert(format!("{prefix}/w"), init_linear(rng, vw, spec.hidden));
        }
        GnKind::Gat => {
            let vw = v_width(spec, dims);
            pset.insert(format!("{prefix}/proj"), init_linear(rng, vw, spec.hidden));
            init_mlp(rng, pset, &gat_att_spec(spec, dims), &format!("{prefix}/att"));
        }
    }
}

/// Executor handles for one block's parameters.
pub enum GnBinding<V> {
    MpnnMax { msg: BoundMlp<V> },
    Path { msg: BoundMlp<V>, score: BoundMlp<V> },
    Gcn { w: V },
    Gat { proj: V, att: BoundMlp<V> },
}

impl GNBlockSpec {
    pub fn bind<E: Executor>(
        &self,
        ex: &mut E,
        pset: &ParamSet,
        dims: GnDims,
        prefix: &str,
        bound: &mut BoundList<E::V>,
    ) -> Result<GnBinding<E::V>, LayerError> {
        match self.kind {
            GnKind::MpnnMax => Ok(GnBinding::MpnnMax {
                msg: bind_mlp(ex, pset, &message_spec(self, dims), &format!("{prefix}/msg"), bound)?,
            }),
            GnKind::PathGnn => Ok(GnBinding::Path {
                msg: bind_mlp(ex, pset, &message_spec(self, dims), &format!("{prefix}/msg"), bound)?,
                score: bind_mlp(ex, pset, &score_spec(self, dims), &format!("{prefix}/score"), bound)?,
            }),
            GnKind::PathGnnSim => Ok(GnBinding::Path {
                msg: bind_mlp(
                    ex,
                    pset,
                    &message_spec_sim(self, dims),
                    &format!("{prefix}/msg"),
                    bound,
                )?,
                score: bind_mlp(ex, pset, &score_spec(self, dims), &format!("{prefix}/score"), bound)?,
            }),
            GnKind::Gcn => {
                let name = format!("{prefix}/w");
                let w = pset.get(&name)?;
                let v = ex.leaf(w.clone());
                bound.push((name, v.clone()));
                Ok(GnBinding::Gcn { w: v })
            }
            GnKind::Gat => {
                let name = format!("{prefix}/proj");
                let w = pset.get(&name)?;
                let v = ex.leaf(w.clone());
                bound.push((name, v.clone()));
                Ok(GnBinding::Gat {
                    proj: v,
                    att: bind_mlp(ex, pset, &gat_att_spec(self, dims), &format!("{prefix}/att"), bound)?,
                })
            }
        }
    }
}

/// Per-batch graph structure lifted onto an executor once and reused for
/// every sweep.
pub struct GnContext<V> {
    pub senders: Rc<Vec<usize>>,
    pub receivers: Rc<Vec<usize>>,
    pub has_incoming: Rc<Vec<bool>>,
    pub num_nodes: usize,
    pub edge_attrs: V,
    /// Raw scalar edge weights for adjacency-normalized kinds.
    pub edge_weights: Vec<f64>,
    /// Original node attributes; required when input-concat is on.
    pub input_attrs: Option<V>,
}

impl<V> GnContext<V> {
    pub fn from_batch<E: Executor<V = V>>(
        ex: &mut E,
        batch: &GraphBatch,
        with_input_attrs: bool,
    ) -> Self {
        let g = &batch.graph;
        let senders = Rc::new(g.senders());
        let receivers = Rc::new(g.receivers());
        let mut has_incoming = vec![false; g.num_nodes];
        for &r in receivers.iter() {
            has_incoming[r] = true;
        }
        let input_attrs = if with_input_attrs {
            Some(ex.leaf(g.node_attrs.clone()))
        } else {
            None
        };
        GnContext {
            senders,
            receivers,
            has_incoming: Rc::new(has_incoming),
            num_nodes: g.num_nodes,
            edge_attrs: ex.leaf(g.edge_attr_tensor()),
            edge_weights: g.edge_weights(),
            input_attrs,
        }
    }
}

/// One message-passing sweep.
pub fn gn_forward<E: Executor>(
    ex: &mut E,
    spec: &GNBlockSpec,
    binding: &GnBinding<E::V>,
    ctx: &GnContext<E::V>,
    hidden: &E::V,
) -> Result<E::V, LayerError> {
    let h_shape = ex.value(hidden).shape().to_vec();
    if h_shape != [ctx.num_nodes, spec.hidden] {
        return Err(LayerError::Invalid(format!(
            "hidden shape {:?} does not match {} nodes x width {}",
            h_shape, ctx.num_nodes, spec.hidden
        )));
    }
    if ctx.senders.is_empty() {
        return Ok(hidden.clone()); // nothing receives a message
    }
    let v = if spec.input_concat {
        let attrs = ctx.input_attrs.as_ref().ok_or_else(|| {
            LayerError::Invalid("input-concat block needs original node attrs".into())
        })?;
        ex.concat_rows(&[attrs, hidden])?
    } else {
        hidden.clone()
    };

    match binding {
        GnBinding::MpnnMax { msg } => {
            let vs = ex.gather_rows(&v, &ctx.senders)?;
            let vr = ex.gather_rows(&v, &ctx.receivers)?;
            let msg_in = ex.concat_rows(&[&vs, &vr, &ctx.edge_attrs])?;
            let m = mlp_forward(ex, &message_spec(spec, dims_of(ex, spec, ctx)), msg, &msg_in)?;
            let agg = ex.segment_reduce(
                &m,
                &ctx.receivers,
                ctx.num_nodes,
                Reduce::Max,
                EmptySegment::Fill(0.0),
            )?;
            let upd = ex.max_elem(hidden, &agg)?;
            Ok(ex.where_rows(&ctx.has_incoming, &upd, hidden)?)
        }
        GnBinding::Path { msg, score } => {
            let vs = ex.gather_rows(&v, &ctx.senders)?;
            let vr = ex.gather_rows(&v, &ctx.receivers)?;
            let score_in = ex.concat_rows(&[&vs, &vr, &ctx.edge_attrs])?;
            let dims = dims_of(ex, spec, ctx);
            let m = if spec.kind == GnKind::PathGnnSim {
                let msg_in = ex.concat_rows(&[&vs, &ctx.edge_attrs])?;
                mlp_forward(ex, &message_spec_sim(spec, dims), msg, &msg_in)?
            } else {
                mlp_forward(ex, &message_spec(spec, dims), msg, &score_in)?
            };
            let s = mlp_forward(ex, &score_spec(spec, dims), score, &score_in)?;
            let alpha =
                ex.segment_softmax(&s, &ctx.receivers, ctx.num_nodes, spec.homogeneous)?;
            let weighted = ex.scale_rows(&m, &alpha)?;
            let agg = ex.segment_reduce(
                &weighted,
                &ctx.receivers,
                ctx.num_nodes,
                Reduce::Sum,
                EmptySegment::Fill(0.0),
            )?;
            let upd = ex.max_elem(hidden, &agg)?;
            Ok(ex.where_rows(&ctx.has_incoming, &upd, hidden)?)
        }
        GnBinding::Gcn { w } => {
            let (edge_coeff, self_coeff) = gcn_coefficients(ctx, spec.homogeneous);
            let ec = ex.leaf(edge_coeff);
            let sc = ex.leaf(self_coeff);
            let vs = ex.gather_rows(&v, &ctx.senders)?;
            let weighted = ex.scale_rows(&vs, &ec)?;
            let agg = ex.segment_reduce(
                &weighted,
                &ctx.receivers,
                ctx.num_nodes,
                Reduce::Sum,
                EmptySegment::Fill(0.0),
            )?;
            let own = ex.scale_rows(&v, &sc)?;
            let z = ex.add(&agg, &own)?;
            let out = ex.matmul(&z, w)?;
            let act = ex.relu(&out);
            Ok(ex.where_rows(&ctx.has_incoming, &act, hidden)?)
        }
        GnBinding::Gat { proj, att } => {
            let projected = ex.matmul(&v, proj)?;
            let vs = ex.gather_rows(&v, &ctx.senders)?;
            let vr = ex.gather_rows(&v, &ctx.receivers)?;
            let att_in = ex.concat_rows(&[&vs, &vr, &ctx.edge_attrs])?;
            let dims = dims_of(ex, spec, ctx);
            let logits = mlp_forward(ex, &gat_att_spec(spec, dims), att, &att_in)?;
            let alpha =
                ex.segment_softmax(&logits, &ctx.receivers, ctx.num_nodes, spec.homogeneous)?;
            let msgs = ex.gather_rows(&projected, &ctx.senders)?;
            let weighted = ex.scale_rows(&msgs, &alpha)?;
            let agg = ex.segment_reduce(
                &weighted,
                &ctx.receivers,
                ctx.num_nodes,
                Reduce::Sum,
                EmptySegment::Fill(0.0),
            )?;
            let act = ex.relu(&agg);
            Ok(ex.where_rows(&ctx.has_incoming, &act, hidden)?)
        }
    }
}

fn dims_of<E: Executor>(ex: &E, spec: &GNBlockSpec, ctx: &GnContext<E::V>) -> GnDims {
    let node_attrs = if spec.input_concat {
        ctx.input_attrs
            .as_ref()
            .map(|a| ex.value(a).cols())
            .unwrap_or(0)
    } else {
        0
    };
    GnDims {
        node_attrs,
        edge_attrs: ex.value(&ctx.edge_attrs).cols(),
    }
}

/// Symmetric normalization coefficients. The classic form adds a
/// unit-weight self-loop; the homogeneous form uses the mean incoming
/// weight as the self-loop weight so every coefficient is invariant under
/// positive scaling of the edge weights.
fn gcn_coefficients<V>(ctx: &GnContext<V>, homogeneous: bool) -> (Tensor, Tensor) {
    let n = ctx.num_nodes;
    let e = ctx.senders.len();
    let mut wsum = vec![0.0f64; n];
    let mut count = vec![0usize; n];
    for (k, &r) in ctx.receivers.iter().enumerate() {
        wsum[r] += ctx.edge_weights[k];
        count[r] += 1;
    }
    let self_w: Vec<f64> = (0..n)
        .map(|i| {
            if homogeneous {
                if count[i] > 0 {
                    wsum[i] / count[i] as f64
                } else {
                    0.0 // isolated rows are skip-updated anyway
                }
            } else {
                1.0
            }
        })
        .collect();
    let deg: Vec<f64> = (0..n).map(|i| self_w[i] + wsum[i]).collect();
    let mut edge_coeff = vec![0.0f64; e];
    for k in 0..e {
        let (s, r) = (ctx.senders[k], ctx.receivers[k]);
        let denom = (deg[s] * deg[r]).sqrt();
        edge_coeff[k] = if denom > 0.0 {
            ctx.edge_weights[k] / denom
        } else {
            0.0
        };
    }
    let self_coeff: Vec<f64> = (0..n)
        .map(|i| if deg[i] > 0.0 { self_w[i] / deg[i] } else { 0.0 })
        .collect();
    (Tensor::column(edge_coeff), Tensor::column(self_coeff))
}

/// Per-graph pooling of node states; permutation invariant.
pub fn readout<E: Executor>(
    ex: &mut E,
    node_h: &E::V,
    graph_ids: &Rc<Vec<usize>>,
    num_graphs: usize,
    mode: Reduce,
) -> Result<E::V, LayerError> {
    Ok(ex.segment_reduce(node_h, graph_ids, num_graphs, mode, EmptySegment::Error)?)
}

/// Hand-set message weights that make one MpnnMax sweep equal one
/// relaxation sweep of the shortest-path recurrence in negated space:
/// the message is `h_sender - weight`, reconstructed bias-free through
/// relu as `relu(z) - relu(-z)`.
pub fn bellman_ford_message_params(prefix: &str) -> (GNBlockSpec, ParamSet) {
    let spec = GNBlockSpec {
        kind: GnKind::MpnnMax,
        hidden: 1,
        mlp_hidden: 2,
        homogeneous: true,
        input_concat: false,
    };
    let mut pset = ParamSet::new();
    // msg_in columns: [h_s, h_r, e]; first layer makes [z, -z], z = h_s - e
    pset.insert(
        format!("{prefix}/msg/0/w"),
        Tensor::matrix(3, 2, vec![1.0, -1.0, 0.0, 0.0, -1.0, 1.0]).unwrap(),
    );
    pset.insert(
        format!("{prefix}/msg/1/w"),
        Tensor::matrix(2, 1, vec![1.0, -1.0]).unwrap(),
    );
    (spec, pset)
}

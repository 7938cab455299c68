//! Cross-scale evaluation: per-scale metrics, halting statistics, and
//! the success-rate walk.

use rayon::prelude::*;

use super::loss::{accuracy_of_rounded, relative_loss};
use super::model::Model;
use super::postprocess::path_weight;
use super::TrainError;
use crate::graph::{batch, Graph};
use crate::nn::ParamSet;
use crate::tasks::{set_endpoint_onehots, shortest_path_endpoints, TaskKind, TaskSample, Target};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct MetricRow {
    pub scale: String,
    pub metric: String,
    pub value: f64,
    pub count: usize,
}

/// One controller run per evaluated sample; feeds the steps-vs-distance
/// analysis and the trace CSV.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub sample: usize,
    pub distance: f64,
    pub steps: usize,
    pub forced_halt: bool,
    /// Message-passing lower bound for an exact answer: distance / 2.
    pub min_steps: f64,
    /// Whether the success walk recovered an exactly optimal path
    /// (None when the walk was not run).
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Run the greedy path walk and report a success rate
    /// (shortest-path and navigation tasks).
    pub success_rate: bool,
    /// Cap the number of samples the walk runs on (it is model-call
    /// heavy); metrics other than success use every sample.
    pub success_samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<MetricRow>,
    pub traces: Vec<TraceRow>,
    /// (target, prediction) pairs in sample order.
    pub pairs: Vec<(f64, f64)>,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.metric == name).map(|r| r.value)
    }
}

/// Re-encode a sample's graph with new endpoint roles, preserving the
/// task's other node attributes.
fn reencode(task: TaskKind, graph: &Graph, source: usize, target: usize) -> Graph {
    let mut g = graph.clone();
    match task {
        TaskKind::Navigation => {
            let n = g.num_nodes;
            let mut attrs = Vec::with_capacity(n * 4);
            for i in 0..n {
                let height = g.node_attrs.row(i)[0];
                let col = if i == source {
                    1
                } else if i == target {
                    2
                } else {
                    3
                };
                let mut row = [height, 0.0, 0.0, 0.0];
                row[col] = 1.0;
                attrs.extend_from_slice(&row);
            }
            g.set_node_attrs(Tensor::new(vec![n, 4], attrs).expect("sized"))
                .expect("same rows");
        }
        _ => set_endpoint_onehots(&mut g, source, target),
    }
    g
}

fn scalar_prediction(model: &Model, params: &ParamSet, graph: &Graph) -> Result<(f64, usize, bool), TrainError> {
    let b = batch(std::slice::from_ref(graph))?;
    let (pred, traces) = model.predict(params, &b)?;
    let (steps, forced) = traces
        .last()
        .map(|t| {
            let hs = t.halt_step.iter().copied().max().unwrap_or(t.steps);
            (hs, t.forced_halt.iter().any(|&f| f))
        })
        .unwrap_or((0, false));
    Ok((pred.data()[0], steps, forced))
}

/// Evaluate a model over one dataset, producing metric rows labelled
/// with `scale`, per-sample traces, and raw prediction pairs.
pub fn evaluate(
    model: &Model,
    params: &ParamSet,
    samples: &[TaskSample],
    scale: &str,
    opts: &EvalOptions,
) -> Result<EvalReport, TrainError> {
    let task = model.spec.task;
    let per_sample: Vec<Result<(f64, usize, bool), TrainError>> = samples
        .par_iter()
        .map(|s| {
            if model.spec.per_node_output() {
                let b = batch(std::slice::from_ref(&s.graph))?;
                let (pred, traces) = model.predict(params, &b)?;
                // mean squared error across the targeted entries
                let Target::PerNode { nodes, values } = &s.target else {
                    return Err(TrainError::Invalid("per-node target expected".into()));
                };
                let mut se = 0.0;
                let mut count = 0;
                for (node, want) in nodes.iter().zip(values) {
                    for (j, w) in want.iter().enumerate() {
                        let p = pred.row(*node)[j];
                        se += (p - w) * (p - w);
                        count += 1;
                    }
                }
                let (steps, forced) = traces
                    .last()
                    .map(|t| (t.steps, t.forced_halt.iter().any(|&f| f)))
                    .unwrap_or((0, false));
                Ok((se / count.max(1) as f64, steps, forced))
            } else {
                scalar_prediction(model, params, &s.graph)
            }
        })
        .collect();

    let mut pairs = Vec::with_capacity(samples.len());
    let mut traces = Vec::with_capacity(samples.len());
    let mut per_sample_mse = Vec::new();
    for (i, r) in per_sample.into_iter().enumerate() {
        let (value, steps, forced) = r?;
        let distance = samples[i].target.scalar().unwrap_or(f64::NAN);
        if model.spec.per_node_output() {
            per_sample_mse.push(value);
        } else {
            pairs.push((distance, value));
        }
        traces.push(TraceRow {
            sample: i,
            distance,
            steps,
            forced_halt: forced,
            min_steps: distance / 2.0,
            correct: None,
        });
    }

    let mut rows = Vec::new();
    let count = samples.len();
    match task {
        TaskKind::Physics => {
            rows.push(MetricRow {
                scale: scale.into(),
                metric: "mse".into(),
                value: per_sample_mse.iter().sum::<f64>() / count.max(1) as f64,
                count,
            });
        }
        TaskKind::ComponentCounting => {
            rows.push(MetricRow {
                scale: scale.into(),
                metric: "accuracy".into(),
                value: accuracy_of_rounded(&pairs),
                count,
            });
            rows.push(row_relative_loss(scale, &pairs, count));
        }
        _ => {
            rows.push(row_relative_loss(scale, &pairs, count));
        }
    }

    if opts.success_rate && matches!(task, TaskKind::ShortestPath | TaskKind::Navigation) {
        let limit = opts.success_samples.unwrap_or(samples.len()).min(samples.len());
        let successes: Vec<Result<bool, TrainError>> = samples[..limit]
            .par_iter()
            .map(|s| walk_succeeds(model, params, s))
            .collect();
        let mut ok = 0;
        for (i, r) in successes.into_iter().enumerate() {
            let good = r?;
            traces[i].correct = Some(good);
            if good {
                ok += 1;
            }
        }
        rows.push(MetricRow {
            scale: scale.into(),
            metric: "success_rate".into(),
            value: ok as f64 / limit.max(1) as f64,
            count: limit,
        });
    }

    let mean_steps = traces.iter().map(|t| t.steps as f64).sum::<f64>() / count.max(1) as f64;
    rows.push(MetricRow {
        scale: scale.into(),
        metric: "mean_steps".into(),
        value: mean_steps,
        count,
    });

    Ok(EvalReport { rows, traces, pairs })
}

fn row_relative_loss(scale: &str, pairs: &[(f64, f64)], count: usize) -> MetricRow {
    let value = if pairs.is_empty() {
        0.0
    } else {
        pairs
            .iter()
            .map(|(y, p)| relative_loss(*y, *p).unwrap_or(f64::INFINITY))
            .sum::<f64>()
            / pairs.len() as f64
    };
    MetricRow {
        scale: scale.into(),
        metric: "relative_loss".into(),
        value,
        count,
    }
}

/// Greedy walk success: the recovered path length equals the true
/// shortest length exactly. Each step's distance queries run as one
/// batched forward; per-graph halting keeps the batched outputs equal to
/// solo runs.
fn walk_succeeds(model: &Model, params: &ParamSet, s: &TaskSample) -> Result<bool, TrainError> {
    let Some((src, tgt)) = shortest_path_endpoints(s) else {
        return Err(TrainError::Invalid("sample lacks endpoints".into()));
    };
    let task = model.spec.task;
    let graph = &s.graph;
    let path = super::postprocess::path_postprocess_batched(graph, src, tgt, |nodes| {
        // dist(target, target) is zero by definition, not a model query
        let queried: Vec<usize> = nodes.iter().copied().filter(|&l| l != tgt).collect();
        let mut by_node = std::collections::HashMap::new();
        if !queried.is_empty() {
            let graphs: Vec<Graph> = queried
                .iter()
                .map(|&l| reencode(task, graph, l, tgt))
                .collect();
            let b = batch(&graphs)?;
            let (pred, _) = model.predict(params, &b)?;
            for (l, v) in queried.iter().zip(pred.data()) {
                by_node.insert(*l, *v);
            }
        }
        Ok(nodes
            .iter()
            .map(|&l| if l == tgt { 0.0 } else { by_node[&l] })
            .collect())
    })?;
    let want = s.target.scalar().unwrap_or(f64::NAN);
    Ok(match path {
        Some(p) => path_weight(graph, &p) == Some(want),
        None => false,
    })
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let rank = |vals: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..vals.len()).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        let mut ranks = vec![0.0; vals.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && vals[idx[j + 1]] == vals[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                ranks[idx[k]] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let mx = rx.iter().sum::<f64>() / n as f64;
    let my = ry.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..n {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_handles_monotone_and_ties() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [10.0, 20.0, 30.0, 40.0];
        assert!((spearman(&xs, &ys) - 1.0).abs() < 1e-12);
        let inv = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&xs, &inv) + 1.0).abs() < 1e-12);
        let tied = [1.0, 1.0, 2.0, 2.0];
        let with = [1.0, 2.0, 3.0, 4.0];
        let r = spearman(&tied, &with);
        assert!(r > 0.8 && r < 1.0, "{r}");
    }
}

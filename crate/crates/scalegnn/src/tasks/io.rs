//! Newline-delimited JSON datasets and load-time verification.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::encode::shortest_path_endpoints;
use super::{DataError, SampleMeta, TaskKind, TaskSample, Target};
use crate::graph::{Edge, Graph};
use crate::oracles;
use crate::tensor::Tensor;

#[derive(Serialize, Deserialize)]
struct Record {
    task: TaskKind,
    n: usize,
    node_attrs: Vec<Vec<f64>>,
    /// `[sender, receiver, attr...]` per edge.
    edges: Vec<Vec<Value>>,
    target: Target,
    meta: SampleMeta,
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl Record {
    fn from_sample(s: &TaskSample) -> Self {
        let g = &s.graph;
        let node_attrs = (0..g.num_nodes).map(|i| g.node_attrs.row(i).to_vec()).collect();
        let edges = g
            .edges
            .iter()
            .map(|e| {
                let mut row = vec![Value::from(e.sender), Value::from(e.receiver)];
                row.extend(e.attr.iter().map(|&w| Value::from(w)));
                row
            })
            .collect();
        Record {
            task: s.task,
            n: g.num_nodes,
            node_attrs,
            edges,
            target: s.target.clone(),
            meta: s.meta.clone(),
        }
    }

    fn into_sample(self, line: usize) -> Result<TaskSample, DataError> {
        let bad = |message: String| DataError::Malformed { line, message };
        let d_v = self.node_attrs.first().map(|r| r.len()).unwrap_or(0);
        let mut attrs = Vec::with_capacity(self.n * d_v);
        if self.node_attrs.len() != self.n {
            return Err(bad(format!(
                "{} attr rows for {} nodes",
                self.node_attrs.len(),
                self.n
            )));
        }
        for row in &self.node_attrs {
            if row.len() != d_v {
                return Err(bad("ragged node attributes".into()));
            }
            attrs.extend_from_slice(row);
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for row in &self.edges {
            if row.len() < 2 {
                return Err(bad("edge row needs sender and receiver".into()));
            }
            let sender = row[0]
                .as_u64()
                .ok_or_else(|| bad(format!("bad sender {:?}", row[0])))?
                as usize;
            let receiver = row[1]
                .as_u64()
                .ok_or_else(|| bad(format!("bad receiver {:?}", row[1])))?
                as usize;
            let attr = row[2..]
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| bad(format!("bad edge attr {v:?}"))))
                .collect::<Result<Vec<f64>, _>>()?;
            edges.push(Edge::new(sender, receiver, attr));
        }
        let graph = Graph {
            num_nodes: self.n,
            node_attrs: Tensor::new(vec![self.n, d_v], attrs)
                .map_err(|e| bad(e.to_string()))?,
            edges,
            global_attr: None,
        };
        graph.validate().map_err(|e| bad(e.to_string()))?;
        if !self.target.is_finite() {
            return Err(bad("non-finite target".into()));
        }
        Ok(TaskSample {
            graph,
            target: self.target,
            task: self.task,
            meta: self.meta,
        })
    }
}

/// One JSON object per line; the file holds exactly one task kind.
pub fn write_dataset(samples: &[TaskSample], path: &Path) -> Result<(), DataError> {
    if let Some(first) = samples.first() {
        if samples.iter().any(|s| s.task != first.task) {
            return Err(DataError::Invalid(
                "dataset files hold one task kind".into(),
            ));
        }
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for s in samples {
        let line = serde_json::to_string(&Record::from_sample(s))
            .map_err(|e| DataError::Invalid(format!("serialize: {e}")))?;
        out.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
        out.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<TaskSample>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| DataError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        samples.push(record.into_sample(i + 1)?);
    }
    Ok(samples)
}

/// Re-verify a deterministic slice of targets against their oracles.
/// `fraction` of the samples are checked (at least one when non-empty).
pub fn spot_check_targets(samples: &[TaskSample], fraction: f64) -> Result<(), DataError> {
    if samples.is_empty() {
        return Ok(());
    }
    let stride = (1.0 / fraction.clamp(1e-6, 1.0)).round().max(1.0) as usize;
    for (index, s) in samples.iter().enumerate().step_by(stride) {
        verify_sample(index, s)?;
    }
    Ok(())
}

fn verify_sample(index: usize, s: &TaskSample) -> Result<(), DataError> {
    let fail = |message: String| DataError::Verification { index, message };
    match s.task {
        TaskKind::ShortestPath => {
            // scaled copies scale weights and targets alike, so the oracle
            // on the stored graph reproduces the stored target directly
            let (src, tgt) = shortest_path_endpoints(s)
                .ok_or_else(|| fail("missing endpoints".into()))?;
            let d = oracles::dijkstra(&s.graph, src).map_err(|e| fail(e.to_string()))?;
            let want = s.target.scalar().ok_or_else(|| fail("scalar target".into()))?;
            if !d.reachable[tgt] || (d.dist[tgt] - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(fail(format!(
                    "distance {} vs recorded {}",
                    d.dist[tgt], want
                )));
            }
        }
        TaskKind::Navigation => {
            let src = s.meta.source.ok_or_else(|| fail("missing source".into()))?;
            let tgt = s.meta.target_node.ok_or_else(|| fail("missing target".into()))?;
            let side = (s.graph.num_nodes as f64).sqrt().round() as usize;
            if side * side != s.graph.num_nodes {
                return Err(fail("navigation graph is not a square grid".into()));
            }
            // one-hot magnitude reveals the scale of a scaled copy
            let scale = s.graph.node_attrs.row(src)[1];
            if scale <= 0.0 {
                return Err(fail("source one-hot missing".into()));
            }
            let heights: Vec<Vec<f64>> = (0..side)
                .map(|r| {
                    (0..side)
                        .map(|c| s.graph.node_attrs.row(r * side + c)[0] / scale)
                        .collect()
                })
                .collect();
            let truth = oracles::grid_truth(
                &heights,
                (src / side, src % side),
                (tgt / side, tgt % side),
            )
            .map_err(|e| fail(e.to_string()))?;
            let want = s.target.scalar().ok_or_else(|| fail("scalar target".into()))?;
            let got = truth.hops as f64 * scale;
            if !truth.reachable || (got - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(fail(format!("hop length {got} vs recorded {want}")));
            }
        }
        TaskKind::ComponentCounting => {
            let count = oracles::count_components(&s.graph) as f64;
            if s.target.scalar() != Some(count) {
                return Err(fail(format!("component count {count}")));
            }
        }
        TaskKind::Tsp => {
            let want = s.target.scalar().ok_or_else(|| fail("scalar target".into()))?;
            let pts: Vec<(f64, f64)> = (0..s.graph.num_nodes)
                .map(|i| (s.graph.node_attrs.row(i)[0], s.graph.node_attrs.row(i)[1]))
                .collect();
            let got = if s.meta.approximate {
                oracles::tsp_heuristic(&pts).map_err(|e| fail(e.to_string()))?.0
            } else {
                oracles::tsp_exact(&pts).map_err(|e| fail(e.to_string()))?
            };
            if (got - want).abs() > 1e-9 * want.abs().max(1.0) {
                return Err(fail(format!("tour length {got} vs recorded {want}")));
            }
        }
        TaskKind::Physics => {
            let Target::PerNode { values, .. } = &s.target else {
                return Err(fail("physics targets are per-node".into()));
            };
            let v = s.graph.node_attrs.row(0)[1];
            let gap = s.graph.edges.first().map(|e| e.attr[0]).unwrap_or(0.0);
            let state = oracles::newton_step(s.graph.num_nodes, gap, v, 1.0)
                .map_err(|e| fail(e.to_string()))?;
            let want = [
                vec![state.left_pos, state.left_speed],
                vec![state.right_pos, state.right_speed],
            ];
            for (got, w) in values.iter().zip(&want) {
                for (a, b) in got.iter().zip(w) {
                    if (a - b).abs() > 1e-9 {
                        return Err(fail(format!("state {a} vs {b}")));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Copy of a sample with node attrs, edge attrs, and targets scaled by
/// `lambda`; the exact transformation homogeneous models commute with.
pub fn scale_sample(s: &TaskSample, lambda: f64) -> TaskSample {
    let mut graph = s.graph.clone();
    graph.node_attrs = crate::tensor::affine(&graph.node_attrs, lambda, 0.0);
    for e in &mut graph.edges {
        for a in &mut e.attr {
            *a *= lambda;
        }
    }
    let target = match &s.target {
        Target::Scalar(v) => Target::Scalar(lambda * v),
        Target::PerNode { nodes, values } => Target::PerNode {
            nodes: nodes.clone(),
            values: values
                .iter()
                .map(|v| v.iter().map(|x| lambda * x).collect())
                .collect(),
        },
    };
    TaskSample {
        graph,
        target,
        task: s.task,
        meta: SampleMeta {
            weight_range: s.meta.weight_range.map(|(a, b)| (lambda * a, lambda * b)),
            ..s.meta.clone()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GeneratorKind;
    use crate::tasks::{generate_dataset, DatasetSpec};

    fn spec(task: TaskKind, count: usize) -> DatasetSpec {
        DatasetSpec {
            task,
            generator: GeneratorKind::default_lobster(),
            n_min: 4,
            n_max: 10,
            weighted: task == TaskKind::ShortestPath,
            weight_min: 0.5,
            weight_max: 1.5,
            count,
            master_seed: 99,
        }
    }

    #[test]
    fn empty_dataset_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        write_dataset(&[], &path).unwrap();
        assert!(read_dataset(&path).unwrap().is_empty());
    }

    #[test]
    fn datasets_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        for task in [
            TaskKind::ShortestPath,
            TaskKind::ComponentCounting,
            TaskKind::Tsp,
            TaskKind::Physics,
            TaskKind::Navigation,
        ] {
            let samples = generate_dataset(&spec(task, 25)).unwrap();
            let path = dir.path().join(format!("{}.jsonl", task.name()));
            write_dataset(&samples, &path).unwrap();
            let back = read_dataset(&path).unwrap();
            assert_eq!(samples, back, "{task:?}");
        }
    }

    #[test]
    fn loaded_targets_pass_oracle_spot_checks() {
        let dir = tempfile::tempdir().unwrap();
        for task in [
            TaskKind::ShortestPath,
            TaskKind::ComponentCounting,
            TaskKind::Tsp,
            TaskKind::Physics,
            TaskKind::Navigation,
        ] {
            let samples = generate_dataset(&spec(task, 20)).unwrap();
            let path = dir.path().join(format!("v_{}.jsonl", task.name()));
            write_dataset(&samples, &path).unwrap();
            let back = read_dataset(&path).unwrap();
            spot_check_targets(&back, 1.0).unwrap();
        }
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let samples = generate_dataset(&spec(TaskKind::ShortestPath, 2)).unwrap();
        write_dataset(&samples, &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{definitely not json\n");
        std::fs::write(&path, text).unwrap();
        let err = read_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn mixed_task_files_are_rejected() {
        let a = generate_dataset(&spec(TaskKind::ShortestPath, 1)).unwrap();
        let b = generate_dataset(&spec(TaskKind::Tsp, 1)).unwrap();
        let both = [a, b].concat();
        let dir = tempfile::tempdir().unwrap();
        let err = write_dataset(&both, &dir.path().join("mixed.jsonl")).unwrap_err();
        assert!(matches!(err, DataError::Invalid(_)));
    }

    #[test]
    fn scaled_samples_still_verify() {
        let samples = generate_dataset(&spec(TaskKind::ShortestPath, 10)).unwrap();
        let scaled: Vec<TaskSample> = samples.iter().map(|s| scale_sample(s, 4.0)).collect();
        spot_check_targets(&scaled, 1.0).unwrap();
        for (raw, sc) in samples.iter().zip(&scaled) {
            assert_eq!(sc.target.scalar().unwrap(), 4.0 * raw.target.scalar().unwrap());
        }
    }
}

//! Per-task sample construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DataError, DatasetSpec, SampleMeta, TaskKind, TaskSample, Target};
use crate::graph::{generate, generate_multi_component, stats, Edge, Graph};
use crate::mix_seed;
use crate::oracles::{
    dijkstra, grid_truth, initial_state, newton_step, tsp_exact, tsp_heuristic, BALL_RADIUS,
    IMPASSABLE_HEIGHT, TSP_EXACT_MAX,
};
use crate::tensor::Tensor;

const RETRIES: usize = 64;

fn sample_n(spec: &DatasetSpec, rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(spec.n_min..spec.n_max)
}

/// Three-way one-hot rows: source 100, target 010, other 001.
pub fn set_endpoint_onehots(graph: &mut Graph, source: usize, target: usize) {
    let n = graph.num_nodes;
    let mut attrs = vec![0.0; n * 3];
    for i in 0..n {
        let col = if i == source {
            0
        } else if i == target {
            1
        } else {
            2
        };
        attrs[i * 3 + col] = 1.0;
    }
    graph
        .set_node_attrs(Tensor::new(vec![n, 3], attrs).expect("sized"))
        .expect("row count unchanged");
}

/// Recover (source, target) from one-hot (possibly rescaled) node attrs.
pub fn shortest_path_endpoints(sample: &TaskSample) -> Option<(usize, usize)> {
    if let (Some(s), Some(t)) = (sample.meta.source, sample.meta.target_node) {
        return Some((s, t));
    }
    let attrs = &sample.graph.node_attrs;
    if attrs.cols() < 2 {
        return None;
    }
    let mut source = None;
    let mut target = None;
    for i in 0..attrs.rows() {
        let row = attrs.row(i);
        if row[0] > 0.0 {
            source = Some(i);
        } else if row[1] > 0.0 {
            target = Some(i);
        }
    }
    Some((source?, target?))
}

/// Weighted or unit-weight shortest-path instance; the target is the
/// exact distance from source to target over directed edges.
pub fn make_shortest_path_sample(spec: &DatasetSpec, seed: u64) -> Result<TaskSample, DataError> {
    for attempt in 0..RETRIES as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt));
        let n = sample_n(spec, &mut rng);
        let mut graph = generate(spec.generator, n, mix_seed(seed, 1000 + attempt))?;
        assign_weights(&mut graph, spec, &mut rng);

        let nodes = graph.num_nodes;
        if nodes < 2 {
            continue;
        }
        let mut picked = None;
        for _ in 0..RETRIES {
            let s = rng.gen_range(0..nodes);
            let t = rng.gen_range(0..nodes);
            if s == t {
                continue;
            }
            let d = dijkstra(&graph, s)?;
            if d.reachable[t] {
                picked = Some((s, t, d.dist[t]));
                break;
            }
        }
        let Some((source, target, dist)) = picked else {
            continue; // no reachable pair: regenerate the graph
        };
        set_endpoint_onehots(&mut graph, source, target);
        let st = stats(&graph);
        return Ok(TaskSample {
            target: Target::Scalar(dist),
            task: TaskKind::ShortestPath,
            meta: SampleMeta {
                size: st.size,
                diameter: st.diameter,
                weight_range: spec.weighted.then_some((spec.weight_min, spec.weight_max)),
                approximate: false,
                source: Some(source),
                target_node: Some(target),
            },
            graph,
        });
    }
    Err(DataError::Invalid(format!(
        "no reachable source/target pair after {RETRIES} regenerations (seed {seed})"
    )))
}

/// One weight per undirected link; mirrored directed edges share it.
fn assign_weights(graph: &mut Graph, spec: &DatasetSpec, rng: &mut ChaCha8Rng) {
    let mut drawn: std::collections::HashMap<(usize, usize), f64> = Default::default();
    let weights: Vec<f64> = graph
        .edges
        .iter()
        .map(|e| {
            let key = (e.sender.min(e.receiver), e.sender.max(e.receiver));
            *drawn.entry(key).or_insert_with(|| {
                if spec.weighted {
                    rng.gen_range(spec.weight_min..spec.weight_max)
                } else {
                    1.0
                }
            })
        })
        .collect();
    for (e, w) in graph.edges.iter_mut().zip(weights) {
        e.attr = vec![w];
    }
}

/// Multi-part graph whose label is the verified component count; node
/// attributes are random in [0,1) so the network can tell nodes apart.
pub fn make_component_sample(spec: &DatasetSpec, seed: u64) -> Result<TaskSample, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sample_n(spec, &mut rng).max(6);
    let (mut graph, label) = generate_multi_component(n, 6, spec.generator, mix_seed(seed, 1))?;
    let nodes = graph.num_nodes;
    let attrs: Vec<f64> = (0..nodes).map(|_| rng.gen::<f64>()).collect();
    graph
        .set_node_attrs(Tensor::new(vec![nodes, 1], attrs).expect("sized"))
        .expect("row count unchanged");
    graph.set_uniform_edge_attr(1.0);
    let st = stats(&graph);
    Ok(TaskSample {
        target: Target::Scalar(label as f64),
        task: TaskKind::ComponentCounting,
        meta: SampleMeta {
            size: st.size,
            diameter: st.diameter,
            weight_range: None,
            approximate: false,
            source: None,
            target_node: None,
        },
        graph,
    })
}

/// Complete graph over integer-grid points; the target is the optimal
/// closed-tour length (exact up to 16 points, 2-opt beyond, flagged).
pub fn make_tsp_sample(spec: &DatasetSpec, seed: u64) -> Result<TaskSample, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sample_n(spec, &mut rng).max(3);
    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(1..=1000) as f64,
                rng.gen_range(1..=1000) as f64,
            )
        })
        .collect();
    let (length, approximate) = if n <= TSP_EXACT_MAX {
        (tsp_exact(&points)?, false)
    } else {
        tsp_heuristic(&points)?
    };
    let mut edges = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = ((points[i].0 - points[j].0).powi(2)
                    + (points[i].1 - points[j].1).powi(2))
                .sqrt();
                edges.push(Edge::new(i, j, vec![d]));
            }
        }
    }
    let attrs: Vec<f64> = points.iter().flat_map(|&(x, y)| [x, y]).collect();
    let graph = Graph {
        num_nodes: n,
        node_attrs: Tensor::new(vec![n, 2], attrs).expect("sized"),
        edges,
        global_attr: None,
    };
    Ok(TaskSample {
        target: Target::Scalar(length),
        task: TaskKind::Tsp,
        meta: SampleMeta {
            size: n,
            diameter: 1,
            weight_range: None,
            approximate,
            source: None,
            target_node: None,
        },
        graph,
    })
}

/// Chain of balls with one incoming from the left; per-node targets are
/// the next positions and speeds of the two end balls.
pub fn make_physics_sample(spec: &DatasetSpec, seed: u64) -> Result<TaskSample, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_balls = sample_n(spec, &mut rng).max(4);
    let range = 200.0 * BALL_RADIUS;
    let gap = rng.gen_range(0.0..range);
    let v = rng.gen_range(0.0..range);
    let state = newton_step(n_balls, gap, v, 1.0)?;

    let (positions, speeds) = initial_state(n_balls, gap, v);
    let mut attrs = Vec::with_capacity(n_balls * 2);
    for i in 0..n_balls {
        attrs.push(positions[i]);
        attrs.push(speeds[i]);
    }
    // surface gaps between consecutive balls as edge attributes
    let mut edges = Vec::with_capacity(2 * (n_balls - 1));
    for i in 0..n_balls - 1 {
        let surface = positions[i + 1] - positions[i] - 2.0 * BALL_RADIUS;
        edges.push(Edge::new(i, i + 1, vec![surface]));
        edges.push(Edge::new(i + 1, i, vec![surface]));
    }
    let graph = Graph {
        num_nodes: n_balls,
        node_attrs: Tensor::new(vec![n_balls, 2], attrs).expect("sized"),
        edges,
        global_attr: None,
    };
    Ok(TaskSample {
        target: Target::PerNode {
            nodes: vec![0, n_balls - 1],
            values: vec![
                vec![state.left_pos, state.left_speed],
                vec![state.right_pos, state.right_speed],
            ],
        },
        task: TaskKind::Physics,
        meta: SampleMeta {
            size: n_balls,
            diameter: n_balls - 1,
            weight_range: None,
            approximate: false,
            source: None,
            target_node: None,
        },
        graph,
    })
}

/// Random-height grid; node attrs are [height, one-hot(category)], edge
/// attrs are ones, and the target is the exact hop length.
pub fn make_navigation_sample(spec: &DatasetSpec, seed: u64) -> Result<TaskSample, DataError> {
    for attempt in 0..RETRIES as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt));
        let side = sample_n(spec, &mut rng).max(3);
        let heights: Vec<Vec<f64>> = (0..side)
            .map(|_| (0..side).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let passable: Vec<(usize, usize)> = (0..side)
            .flat_map(|r| (0..side).map(move |c| (r, c)))
            .filter(|&(r, c)| heights[r][c] <= IMPASSABLE_HEIGHT)
            .collect();
        if passable.len() < 2 {
            continue;
        }
        let mut picked = None;
        for _ in 0..RETRIES {
            let src = passable[rng.gen_range(0..passable.len())];
            let tgt = passable[rng.gen_range(0..passable.len())];
            if src == tgt {
                continue;
            }
            let truth = grid_truth(&heights, src, tgt)?;
            if truth.reachable {
                picked = Some((src, tgt, truth.hops));
                break;
            }
        }
        let Some((src, tgt, hops)) = picked else {
            continue; // fully fragmented grid: regenerate
        };

        let n = side * side;
        let idx = |r: usize, c: usize| r * side + c;
        let mut attrs = vec![0.0; n * 4];
        for r in 0..side {
            for c in 0..side {
                let i = idx(r, c);
                attrs[i * 4] = heights[r][c];
                let col = if (r, c) == src {
                    1
                } else if (r, c) == tgt {
                    2
                } else {
                    3
                };
                attrs[i * 4 + col] = 1.0;
            }
        }
        let mut edges = Vec::new();
        for r in 0..side {
            for c in 0..side {
                if r + 1 < side {
                    edges.push(Edge::new(idx(r, c), idx(r + 1, c), vec![1.0]));
                    edges.push(Edge::new(idx(r + 1, c), idx(r, c), vec![1.0]));
                }
                if c + 1 < side {
                    edges.push(Edge::new(idx(r, c), idx(r, c + 1), vec![1.0]));
                    edges.push(Edge::new(idx(r, c + 1), idx(r, c), vec![1.0]));
                }
            }
        }
        let graph = Graph {
            num_nodes: n,
            node_attrs: Tensor::new(vec![n, 4], attrs).expect("sized"),
            edges,
            global_attr: None,
        };
        let st = stats(&graph);
        return Ok(TaskSample {
            target: Target::Scalar(hops as f64),
            task: TaskKind::Navigation,
            meta: SampleMeta {
                size: n,
                diameter: st.diameter,
                weight_range: None,
                approximate: false,
                source: Some(idx(src.0, src.1)),
                target_node: Some(idx(tgt.0, tgt.1)),
            },
            graph,
        });
    }
    Err(DataError::Invalid(format!(
        "grid stayed fragmented after {RETRIES} regenerations (seed {seed})"
    )))
}

/// Generate `spec.count` samples from independent per-sample seed
/// streams; parallel and order-independent.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<TaskSample>, DataError> {
    spec.validate()?;
    let make = |i: usize| -> Result<TaskSample, DataError> {
        let seed = mix_seed(spec.master_seed, i as u64);
        match spec.task {
            TaskKind::ShortestPath => make_shortest_path_sample(spec, seed),
            TaskKind::ComponentCounting => make_component_sample(spec, seed),
            TaskKind::Tsp => make_tsp_sample(spec, seed),
            TaskKind::Physics => make_physics_sample(spec, seed),
            TaskKind::Navigation => make_navigation_sample(spec, seed),
        }
    };
    (0..spec.count).into_par_iter().map(make).collect()
}

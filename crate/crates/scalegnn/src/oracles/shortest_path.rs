//! Dijkstra and fixed-sweep Bellman-Ford over directed weighted edges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::OracleError;
use crate::graph::Graph;

/// Sentinel distance for nodes not yet reached by a Bellman-Ford sweep.
/// Large enough to lose against any real path, small enough that adding a
/// weight to it stays finite. Never fed to learned models.
pub const UNREACHED: f64 = 1e18;

#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub dist: Vec<f64>,
    pub reachable: Vec<bool>,
    pub parent: Vec<Option<usize>>,
}

impl DistanceResult {
    /// Walk parents back from `target`; None if unreachable.
    pub fn path_to(&self, source: usize, target: usize) -> Option<Vec<usize>> {
        if !self.reachable[target] {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while cur != source {
            cur = self.parent[cur]?;
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the closest node
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact single-source shortest paths; requires strictly positive weights.
pub fn dijkstra(g: &Graph, source: usize) -> Result<DistanceResult, OracleError> {
    if source >= g.num_nodes {
        return Err(OracleError::BadSource(source));
    }
    for e in &g.edges {
        let w = e.attr.first().copied().unwrap_or(1.0);
        if w <= 0.0 {
            return Err(OracleError::NonPositiveWeight(w));
        }
    }
    let adj = g.adjacency();
    let mut dist = vec![f64::INFINITY; g.num_nodes];
    let mut parent = vec![None; g.num_nodes];
    let mut done = vec![false; g.num_nodes];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some(u);
                heap.push(HeapItem { dist: nd, node: v });
            }
        }
    }
    let reachable: Vec<bool> = dist.iter().map(|d| d.is_finite()).collect();
    Ok(DistanceResult {
        dist,
        reachable,
        parent,
    })
}

/// Exactly `k` synchronous relaxation sweeps; converges to the dijkstra
/// distances once `k >= n-1`. Unreached entries hold [`UNREACHED`].
pub fn bellman_ford_k(g: &Graph, source: usize, k: usize) -> Result<Vec<f64>, OracleError> {
    if source >= g.num_nodes {
        return Err(OracleError::BadSource(source));
    }
    for e in &g.edges {
        let w = e.attr.first().copied().unwrap_or(1.0);
        if w < 0.0 {
            return Err(OracleError::NegativeWeight(w));
        }
    }
    let mut dist = vec![UNREACHED; g.num_nodes];
    dist[source] = 0.0;
    let weights = g.edge_weights();
    for _ in 0..k {
        let prev = dist.clone();
        for (e, w) in g.edges.iter().zip(&weights) {
            if prev[e.sender] < UNREACHED {
                let cand = prev[e.sender] + w;
                if cand < dist[e.receiver] {
                    dist[e.receiver] = cand;
                }
            }
        }
    }
    Ok(dist)
}

//! Graph scale descriptors: size, hop diameter, attribute magnitude.

use std::collections::VecDeque;

use super::Graph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    /// Node count.
    pub size: usize,
    /// Longest shortest-path hop count over directed reachable pairs.
    pub diameter: usize,
    /// Max node-attribute L2 norm plus max edge-attribute L2 norm.
    pub magnitude: f64,
}

pub fn stats(g: &Graph) -> GraphStats {
    let adj = g.adjacency();
    let mut diameter = 0;
    let mut dist = vec![usize::MAX; g.num_nodes];
    let mut queue = VecDeque::new();
    for source in 0..g.num_nodes {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    diameter = diameter.max(dist[v]);
                    queue.push_back(v);
                }
            }
        }
    }

    let d_v = g.node_dim();
    let mut node_norm = 0.0f64;
    for i in 0..g.num_nodes {
        if d_v > 0 {
            let row = g.node_attrs.row(i);
            node_norm = node_norm.max(row.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    let mut edge_norm = 0.0f64;
    for e in &g.edges {
        edge_norm = edge_norm.max(e.attr.iter().map(|v| v * v).sum::<f64>().sqrt());
    }

    GraphStats {
        size: g.num_nodes,
        diameter,
        magnitude: node_norm + edge_norm,
    }
}

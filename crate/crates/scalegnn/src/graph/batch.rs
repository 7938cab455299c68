//! Disjoint-union batching with exact unbatching.

use super::{Graph, GraphError};
use crate::tensor::Tensor;

/// Several graphs merged into one, with enough bookkeeping to recover the
/// originals bit-exactly.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub graph: Graph,
    /// Segment index per node; nodes of one graph form a contiguous block.
    pub graph_ids: Vec<usize>,
    pub num_graphs: usize,
    /// Node offset of each member graph, plus the total as a sentinel.
    pub node_offsets: Vec<usize>,
    /// Edge offset of each member graph, plus the total as a sentinel.
    pub edge_offsets: Vec<usize>,
}

pub fn batch(graphs: &[Graph]) -> Result<GraphBatch, GraphError> {
    if graphs.is_empty() {
        return Err(GraphError::InvalidParam("cannot batch zero graphs".into()));
    }
    let d_v = graphs[0].node_dim();
    // edgeless members cannot disagree on d_e
    let d_e = graphs
        .iter()
        .find(|g| g.num_edges() > 0)
        .map(|g| g.edge_dim())
        .unwrap_or(0);
    for g in graphs {
        if g.node_dim() != d_v || (g.num_edges() > 0 && g.edge_dim() != d_e) {
            return Err(GraphError::MixedDims(format!(
                "d_v {} vs {}, d_e {} vs {}",
                d_v,
                g.node_dim(),
                d_e,
                g.edge_dim()
            )));
        }
    }

    let total_nodes: usize = graphs.iter().map(|g| g.num_nodes).sum();
    let mut node_attrs = Vec::with_capacity(total_nodes * d_v);
    let mut edges = Vec::new();
    let mut graph_ids = Vec::with_capacity(total_nodes);
    let mut node_offsets = Vec::with_capacity(graphs.len() + 1);
    let mut edge_offsets = Vec::with_capacity(graphs.len() + 1);
    let mut node_off = 0;
    let mut edge_off = 0;
    for (gi, g) in graphs.iter().enumerate() {
        node_offsets.push(node_off);
        edge_offsets.push(edge_off);
        node_attrs.extend_from_slice(g.node_attrs.data());
        for e in &g.edges {
            edges.push(super::Edge::new(
                e.sender + node_off,
                e.receiver + node_off,
                e.attr.clone(),
            ));
        }
        graph_ids.extend(std::iter::repeat(gi).take(g.num_nodes));
        node_off += g.num_nodes;
        edge_off += g.num_edges();
    }
    node_offsets.push(node_off);
    edge_offsets.push(edge_off);

    Ok(GraphBatch {
        graph: Graph {
            num_nodes: total_nodes,
            node_attrs: Tensor::new(vec![total_nodes, d_v], node_attrs)
                .expect("consistent node dims"),
            edges,
            global_attr: None,
        },
        graph_ids,
        num_graphs: graphs.len(),
        node_offsets,
        edge_offsets,
    })
}

pub fn unbatch(batch: &GraphBatch) -> Vec<Graph> {
    let d_v = batch.graph.node_dim();
    let mut out = Vec::with_capacity(batch.num_graphs);
    for gi in 0..batch.num_graphs {
        let (n0, n1) = (batch.node_offsets[gi], batch.node_offsets[gi + 1]);
        let (e0, e1) = (batch.edge_offsets[gi], batch.edge_offsets[gi + 1]);
        let nodes = n1 - n0;
        let attrs = batch.graph.node_attrs.data()[n0 * d_v..n1 * d_v].to_vec();
        let edges = batch.graph.edges[e0..e1]
            .iter()
            .map(|e| super::Edge::new(e.sender - n0, e.receiver - n0, e.attr.clone()))
            .collect();
        out.push(Graph {
            num_nodes: nodes,
            node_attrs: Tensor::new(vec![nodes, d_v], attrs).expect("slice is rectangular"),
            edges,
            global_attr: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GeneratorKind};

    #[test]
    fn batch_of_one_is_identity_content() {
        let g = Graph::with_structure(3, &[(0, 1), (1, 2)]);
        let b = batch(std::slice::from_ref(&g)).unwrap();
        assert_eq!(b.node_offsets, vec![0, 3]);
        assert_eq!(b.graph, g);
        assert_eq!(unbatch(&b), vec![g]);
    }

    #[test]
    fn second_graph_edges_are_shifted() {
        let g1 = Graph::with_structure(3, &[(0, 1)]);
        let g2 = Graph::with_structure(4, &[(0, 3)]);
        let b = batch(&[g1, g2]).unwrap();
        assert_eq!(b.graph.num_nodes, 7);
        assert_eq!(b.graph.edges[2].sender, 3);
        assert_eq!(b.graph.edges[2].receiver, 6);
        assert_eq!(b.graph_ids, vec![0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn random_lists_round_trip_exactly() {
        for seed in 0..50 {
            let graphs: Vec<Graph> = (0..4)
                .map(|i| {
                    let mut g = generate(
                        GeneratorKind::default_lobster(),
                        4 + (seed + i) as usize % 10,
                        seed * 10 + i,
                    )
                    .unwrap();
                    g.set_uniform_edge_attr(1.5);
                    g.set_node_attrs(Tensor::new(
                        vec![g.num_nodes, 2],
                        (0..g.num_nodes * 2).map(|v| v as f64).collect(),
                    )
                    .unwrap())
                    .unwrap();
                    g
                })
                .collect();
            let b = batch(&graphs).unwrap();
            assert_eq!(unbatch(&b), graphs, "seed {seed}");
        }
    }

    #[test]
    fn mixed_node_dims_are_rejected() {
        let g1 = Graph::with_structure(2, &[(0, 1)]);
        let mut g2 = Graph::with_structure(2, &[(0, 1)]);
        g2.set_node_attrs(Tensor::matrix(2, 1, vec![0.0, 1.0]).unwrap())
            .unwrap();
        assert!(matches!(batch(&[g1, g2]), Err(GraphError::MixedDims(_))));
    }
}

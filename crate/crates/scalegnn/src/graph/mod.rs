//! Attributed directed multigraphs, random generators, batching, stats.

mod batch;
mod generate;
mod stats;

pub use batch::{batch, unbatch, GraphBatch};
pub use generate::{generate, generate_multi_component, GeneratorKind};
pub use stats::{stats, GraphStats};

use crate::tensor::Tensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({sender},{receiver}) out of range for {nodes} nodes")]
    EdgeOutOfRange {
        sender: usize,
        receiver: usize,
        nodes: usize,
    },
    #[error("edge attribute dimension {got} differs from {expected}")]
    EdgeAttrDim { expected: usize, got: usize },
    #[error("node attribute rows {got} differ from node count {expected}")]
    NodeAttrRows { expected: usize, got: usize },
    #[error("knn generator needs k < n, got k={k}, n={n}")]
    KTooLarge { k: usize, n: usize },
    #[error("planar generator: degenerate point set persisted after {0} resamples")]
    DegeneratePoints(u32),
    #[error("cannot batch graphs with mixed attribute dims ({0})")]
    MixedDims(String),
    #[error("{0}")]
    InvalidParam(String),
}

/// Directed edge with an attribute vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub sender: usize,
    pub receiver: usize,
    pub attr: Vec<f64>,
}

impl Edge {
    pub fn new(sender: usize, receiver: usize, attr: Vec<f64>) -> Self {
        Edge {
            sender,
            receiver,
            attr,
        }
    }
}

/// Attributed directed multigraph. Undirected links are stored as two
/// directed edges, which matches the directed message flow of the
/// network blocks while keeping undirected semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub num_nodes: usize,
    /// `[N, d_v]`; `d_v` may be 0 for structure-only graphs.
    pub node_attrs: Tensor,
    pub edges: Vec<Edge>,
    pub global_attr: Option<Vec<f64>>,
}

impl Graph {
    /// Structure-only graph with empty attribute vectors.
    pub fn with_structure(num_nodes: usize, links: &[(usize, usize)]) -> Self {
        let mut edges = Vec::with_capacity(links.len() * 2);
        for &(a, b) in links {
            edges.push(Edge::new(a, b, vec![]));
            edges.push(Edge::new(b, a, vec![]));
        }
        Graph {
            num_nodes,
            node_attrs: Tensor::zeros(vec![num_nodes, 0]),
            edges,
            global_attr: None,
        }
    }

    pub fn node_dim(&self) -> usize {
        self.node_attrs.cols()
    }

    pub fn edge_dim(&self) -> usize {
        self.edges.first().map(|e| e.attr.len()).unwrap_or(0)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.node_attrs.rows() != self.num_nodes {
            return Err(GraphError::NodeAttrRows {
                expected: self.num_nodes,
                got: self.node_attrs.rows(),
            });
        }
        let d_e = self.edge_dim();
        for e in &self.edges {
            if e.sender >= self.num_nodes || e.receiver >= self.num_nodes {
                return Err(GraphError::EdgeOutOfRange {
                    sender: e.sender,
                    receiver: e.receiver,
                    nodes: self.num_nodes,
                });
            }
            if e.attr.len() != d_e {
                return Err(GraphError::EdgeAttrDim {
                    expected: d_e,
                    got: e.attr.len(),
                });
            }
        }
        Ok(())
    }

    /// Replace node attributes, keeping the structure.
    pub fn set_node_attrs(&mut self, attrs: Tensor) -> Result<(), GraphError> {
        if attrs.rows() != self.num_nodes {
            return Err(GraphError::NodeAttrRows {
                expected: self.num_nodes,
                got: attrs.rows(),
            });
        }
        self.node_attrs = attrs;
        Ok(())
    }

    /// Give every edge the same scalar attribute.
    pub fn set_uniform_edge_attr(&mut self, value: f64) {
        for e in &mut self.edges {
            e.attr = vec![value];
        }
    }

    /// Sender indices in edge order.
    pub fn senders(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.sender).collect()
    }

    /// Receiver indices in edge order.
    pub fn receivers(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.receiver).collect()
    }

    /// Edge attributes as an `[E, d_e]` tensor.
    pub fn edge_attr_tensor(&self) -> Tensor {
        let d = self.edge_dim();
        let mut data = Vec::with_capacity(self.edges.len() * d);
        for e in &self.edges {
            data.extend_from_slice(&e.attr);
        }
        Tensor::new(vec![self.edges.len(), d], data).expect("uniform edge dims")
    }

    /// Scalar edge weights (first attribute component, 1.0 when unattributed).
    pub fn edge_weights(&self) -> Vec<f64> {
        self.edges
            .iter()
            .map(|e| e.attr.first().copied().unwrap_or(1.0))
            .collect()
    }

    /// Out-neighbors `(receiver, weight)` of every node, edge order preserved.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for e in &self.edges {
            adj[e.sender].push((e.receiver, e.attr.first().copied().unwrap_or(1.0)));
        }
        adj
    }
}

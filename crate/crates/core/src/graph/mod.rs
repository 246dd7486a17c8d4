//! Undirected graph storage and the symmetric-normalized connectivity operator.

pub mod io;
mod sparse;

pub use sparse::CsrMatrix;

use crate::error::{Error, Result};

/// Immutable undirected graph over dense node ids `0..num_nodes`.
///
/// The adjacency is binary and symmetric with no stored self-loops.
#[derive(Debug, Clone)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: CsrMatrix,
}

impl Graph {
    /// Builds a graph from an edge list that may contain duplicates and both
    /// orientations of an edge. Self-loops are dropped.
    pub fn from_edges(num_nodes: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::Input("graph must have at least one node".into()));
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut loops = 0usize;
        for &(u, v) in edge_list {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Input(format!(
                    "edge ({u}, {v}) references a node outside 0..{num_nodes}"
                )));
            }
            if u == v {
                loops += 1;
                continue;
            }
            edges.push((u.min(v), u.max(v)));
        }
        if loops > 0 {
            log::warn!("dropped {loops} self-loop(s); self-contribution comes from the normalization");
        }
        edges.sort_unstable();
        edges.dedup();

        let adjacency = CsrMatrix::from_triplets(
            num_nodes,
            num_nodes,
            edges
                .iter()
                .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)]),
        )?;
        Ok(Self {
            num_nodes,
            edges,
            adjacency,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges as `(min, max)` pairs in sorted order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        self.adjacency.row(node).0
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors(node).len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|i| self.degree(i)).collect()
    }

    /// `D^-1/2 (A + I) D^-1/2` with `D` the degree matrix of `A + I`.
    pub fn normalize_adjacency(&self) -> NormalizedAdjacency {
        let source_degrees: Vec<f64> = (0..self.num_nodes)
            .map(|i| (self.degree(i) + 1) as f64)
            .collect();
        let d = &source_degrees;
        let entries = (0..self.num_nodes).flat_map(|i| {
            let self_loop = std::iter::once((i, i, 1.0 / d[i]));
            let rest = self
                .neighbors(i)
                .iter()
                .map(move |&j| (i, j, 1.0 / (d[i] * d[j]).sqrt()));
            self_loop.chain(rest)
        });
        let matrix = CsrMatrix::from_triplets(self.num_nodes, self.num_nodes, entries)
            .expect("node ids are in range by construction");
        NormalizedAdjacency {
            matrix,
            source_degrees,
        }
    }
}

/// The renormalized connectivity operator used by connectivity convolution.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    pub matrix: CsrMatrix,
    /// Degree of every node in `A + I`.
    pub source_degrees: Vec<f64>,
}

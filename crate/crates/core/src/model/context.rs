use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{CsrMatrix, Graph};
use crate::numerics::{SparseOperator, Tape, Var};
use crate::roles::RoleAssignment;

/// Initial node features.
#[derive(Debug, Clone)]
pub enum NodeFeatures {
    /// The `n x n` identity, never materialized: `I * W` is `W`.
    Identity(usize),
    Dense(Array2<f64>),
}

impl NodeFeatures {
    pub fn num_nodes(&self) -> usize {
        match self {
            NodeFeatures::Identity(n) => *n,
            NodeFeatures::Dense(x) => x.nrows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            NodeFeatures::Identity(n) => *n,
            NodeFeatures::Dense(x) => x.ncols(),
        }
    }
}

/// Everything the forward pass needs about the graph, prepared once.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub num_nodes: usize,
    pub num_roles: usize,
    /// Renormalized connectivity adjacency.
    pub connectivity: Arc<SparseOperator>,
    /// Member-to-role mean pooling (`roles x n`).
    pub role_pool: Arc<SparseOperator>,
    /// Role-to-member sharing (`n x roles`).
    pub role_share: Arc<SparseOperator>,
    pub features: NodeFeatures,
    /// Per-node role ids, kept for inspection.
    pub member_of: Vec<usize>,
}

impl GraphContext {
    pub fn new(graph: &Graph, roles: &RoleAssignment, features: NodeFeatures) -> Result<Self> {
        let n = graph.num_nodes();
        if roles.num_nodes() != n || features.num_nodes() != n {
            return Err(Error::Shape {
                op: "graph_context",
                detail: format!(
                    "graph has {n} nodes, roles cover {}, features cover {}",
                    roles.num_nodes(),
                    features.num_nodes()
                ),
            });
        }
        let pool = roles.membership().clone();
        let share = share_operator(roles);
        Ok(Self {
            num_nodes: n,
            num_roles: roles.num_roles(),
            connectivity: Arc::new(SparseOperator::new(graph.normalize_adjacency().matrix)),
            role_pool: Arc::new(SparseOperator::new(pool)),
            role_share: Arc::new(SparseOperator::new(share)),
            features,
            member_of: roles.member_of().to_vec(),
        })
    }

    /// `input * w`, where `input` is either the initial features (`None`) or
    /// a recorded hidden representation.
    pub(crate) fn project(&self, tape: &mut Tape, input: Option<Var>, w: Var) -> Result<Var> {
        match (input, &self.features) {
            (Some(h), _) => tape.matmul(h, w),
            (None, NodeFeatures::Identity(n)) => {
                if tape.shape(w).0 != *n {
                    return Err(Error::Shape {
                        op: "project",
                        detail: format!("identity features of width {n} vs weight {:?}", tape.shape(w)),
                    });
                }
                Ok(w)
            }
            (None, NodeFeatures::Dense(x)) => {
                let x = tape.constant(x.clone());
                tape.matmul(x, w)
            }
        }
    }
}

/// Transpose of the membership pattern with unit weights: every node
/// receives its role's embedding unchanged.
fn share_operator(roles: &RoleAssignment) -> CsrMatrix {
    CsrMatrix::from_triplets(
        roles.num_nodes(),
        roles.num_roles(),
        roles.member_of().iter().enumerate().map(|(i, &r)| (i, r, 1.0)),
    )
    .expect("role ids are dense")
}

//! Topology-role discovery: structural features, clustering into roles and the
//! node-to-role membership operator.

mod features;
mod kmeans;
mod threshold;

pub use features::{degree_bin, extract_struct_features, StructFeatures};
pub use kmeans::{distinct_rows, kmeans, KMeansConfig, KMeansResult};
pub use threshold::{build_threshold_adjacency, ThresholdAdjacency, DEFAULT_ORACLE_LIMIT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CsrMatrix;

/// Non-overlapping assignment of every node to one topology role.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleAssignment {
    member_of: Vec<usize>,
    num_roles: usize,
    /// `num_roles x n`; entry `(r, i)` is `1 / |members(r)|` when node `i`
    /// belongs to role `r`.
    membership: CsrMatrix,
}

impl RoleAssignment {
    /// Builds the assignment from raw per-node role ids. Ids need not be
    /// dense: unused ids are dropped and the rest renumbered in ascending
    /// order.
    pub fn from_member_of(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Input("role assignment needs at least one node".into()));
        }
        let mut ids: Vec<usize> = raw.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let member_of: Vec<usize> = raw
            .iter()
            .map(|r| ids.binary_search(r).expect("id collected above"))
            .collect();
        let num_roles = ids.len();
        let mut sizes = vec![0usize; num_roles];
        for &r in &member_of {
            sizes[r] += 1;
        }
        let membership = CsrMatrix::from_triplets(
            num_roles,
            member_of.len(),
            member_of
                .iter()
                .enumerate()
                .map(|(i, &r)| (r, i, 1.0 / sizes[r] as f64)),
        )?;
        Ok(Self {
            member_of,
            num_roles,
            membership,
        })
    }

    /// Every node in its own role.
    pub fn singletons(n: usize) -> Self {
        Self::from_member_of(&(0..n).collect::<Vec<_>>()).expect("n > 0")
    }

    pub fn num_roles(&self) -> usize {
        self.num_roles
    }

    pub fn num_nodes(&self) -> usize {
        self.member_of.len()
    }

    pub fn member_of(&self) -> &[usize] {
        &self.member_of
    }

    pub fn membership(&self) -> &CsrMatrix {
        &self.membership
    }

    pub fn role_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_roles];
        for &r in &self.member_of {
            sizes[r] += 1;
        }
        sizes
    }
}

/// Settings for the default feature-extraction + k-means role pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoleConfig {
    pub k: usize,
    pub hops: usize,
    pub bins: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for RoleConfig {
    fn default() -> Self {
        let km = KMeansConfig::default();
        Self {
            k: 100,
            hops: 2,
            bins: 12,
            seed: 0,
            max_iters: km.max_iters,
            tol: km.tol,
            restarts: km.restarts,
        }
    }
}

/// Clusters structural features into roles.
pub fn discover_roles(features: &StructFeatures, config: &RoleConfig) -> RoleAssignment {
    let result = kmeans(
        features.matrix.view(),
        &KMeansConfig {
            k: config.k,
            seed: config.seed,
            max_iters: config.max_iters,
            tol: config.tol,
            restarts: config.restarts,
        },
    );
    RoleAssignment::from_member_of(&result.assignments).expect("features have at least one row")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn membership_fixtures() {
        let r = RoleAssignment::from_member_of(&[0, 0, 1]).unwrap();
        assert_eq!(r.membership().to_dense(), array![[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]]);

        let one = RoleAssignment::from_member_of(&[3, 3, 3, 3]).unwrap();
        assert_eq!(one.num_roles(), 1);
        assert_eq!(one.membership().to_dense(), array![[0.25, 0.25, 0.25, 0.25]]);

        let id = RoleAssignment::singletons(4);
        assert_eq!(id.membership().to_dense(), ndarray::Array2::<f64>::eye(4));
    }

    #[test]
    fn empty_roles_are_compacted() {
        let r = RoleAssignment::from_member_of(&[7, 2, 7, 9]).unwrap();
        assert_eq!(r.member_of(), &[1, 0, 1, 2]);
        assert_eq!(r.num_roles(), 3);
        assert_eq!(r.role_sizes(), vec![1, 2, 1]);
    }

    #[test]
    fn empty_assignment_rejected() {
        assert!(RoleAssignment::from_member_of(&[]).is_err());
    }

    proptest! {
        #[test]
        fn membership_rows_sum_to_one(raw in prop::collection::vec(0usize..12, 1..60)) {
            let r = RoleAssignment::from_member_of(&raw).unwrap();
            let dense = r.membership().to_dense();
            for row in dense.outer_iter() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            }
            for col in dense.columns() {
                prop_assert_eq!(col.iter().filter(|&&v| v != 0.0).count(), 1);
            }
        }
    }

    /// Nodes joined by a near-1 threshold edge have identical feature rows
    /// and must share a role whenever k does not exceed the distinct rows.
    #[test]
    fn threshold_oracle_agrees_with_roles() {
        let mut edges = Vec::new();
        for s in 0..4 {
            let hub = s * 5;
            for leaf in 1..5 {
                edges.push((hub, hub + leaf));
            }
            edges.push((hub, (hub + 5) % 20));
        }
        let g = Graph::from_edges(20, &edges).unwrap();
        let f = extract_struct_features(&g, 2, 8);
        let distinct = distinct_rows(f.matrix.view());
        let t = build_threshold_adjacency(&f, 1.0 - 1e-9, DEFAULT_ORACLE_LIMIT).unwrap();
        for k in 1..=distinct {
            let roles = discover_roles(&f, &RoleConfig { k, ..Default::default() });
            for (i, j, _) in t.matrix.iter() {
                assert_eq!(roles.member_of()[i], roles.member_of()[j], "k = {k}");
            }
        }
    }
}

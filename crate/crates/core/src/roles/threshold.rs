use super::StructFeatures;
use crate::error::{Error, Result};
use crate::graph::CsrMatrix;

/// Largest graph the pairwise threshold construction accepts by default.
pub const DEFAULT_ORACLE_LIMIT: usize = 2_000;

/// Node-node "augmented path" adjacency from pairwise structural similarity.
///
/// Quadratic in the number of nodes; kept as a small-graph reference for
/// the role-based construction.
#[derive(Debug, Clone)]
pub struct ThresholdAdjacency {
    pub matrix: CsrMatrix,
    pub threshold: f64,
}

fn cosine(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

/// Links `i != j` whenever the cosine similarity of their feature rows is at
/// least `tau`.
pub fn build_threshold_adjacency(
    features: &StructFeatures,
    tau: f64,
    limit: usize,
) -> Result<ThresholdAdjacency> {
    let n = features.num_nodes();
    if n > limit {
        return Err(Error::OracleLimit { n, limit });
    }
    let m = &features.matrix;
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if cosine(m.row(i), m.row(j)) >= tau {
                entries.push((i, j, 1.0));
                entries.push((j, i, 1.0));
            }
        }
    }
    Ok(ThresholdAdjacency {
        matrix: CsrMatrix::from_triplets(n, n, entries)?,
        threshold: tau,
    })
}

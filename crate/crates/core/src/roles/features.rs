use std::collections::VecDeque;

use ndarray::Array2;

use crate::graph::Graph;

/// Per-node local-topology descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct StructFeatures {
    pub matrix: Array2<f64>,
    pub hops: usize,
    pub bins: usize,
    pub description: String,
}

impl StructFeatures {
    pub fn num_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Log2 degree bin: bin `b` holds degrees in `[2^b, 2^(b+1))`. Degree zero
/// shares bin 0 and large degrees saturate in the last bin.
pub fn degree_bin(degree: usize, bins: usize) -> usize {
    if degree == 0 {
        return 0;
    }
    let b = (usize::BITS - 1 - degree.leading_zeros()) as usize;
    b.min(bins - 1)
}

/// Degree-histogram profile of every node's rooted neighborhood.
///
/// Column 0 is `ln(1 + degree)`. It is followed by one block of `bins` columns
/// per distance `k = 0..=hops`, holding the log-binned degree histogram of the
/// nodes exactly `k` hops away, L1-normalized within the block (an empty ring
/// gives an all-zero block).
pub fn extract_struct_features(graph: &Graph, hops: usize, bins: usize) -> StructFeatures {
    assert!(hops >= 1, "hops must be at least 1");
    assert!(bins >= 1, "bins must be at least 1");
    let n = graph.num_nodes();
    let width = 1 + (hops + 1) * bins;
    let degrees = graph.degrees();
    let mut matrix = Array2::zeros((n, width));

    let mut dist = vec![usize::MAX; n];
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();
    for root in 0..n {
        let mut row = matrix.row_mut(root);
        row[0] = (1.0 + degrees[root] as f64).ln();

        dist[root] = 0;
        touched.push(root);
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let d = dist[u];
            row[1 + d * bins + degree_bin(degrees[u], bins)] += 1.0;
            if d == hops {
                continue;
            }
            for &v in graph.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = d + 1;
                    touched.push(v);
                    queue.push_back(v);
                }
            }
        }
        for k in 0..=hops {
            let start = 1 + k * bins;
            let mut block = row.slice_mut(ndarray::s![start..start + bins]);
            let total = block.sum();
            if total > 0.0 {
                block /= total;
            }
        }
        for v in touched.drain(..) {
            dist[v] = usize::MAX;
        }
    }

    StructFeatures {
        matrix,
        hops,
        bins,
        description: format!("khop-degree-histogram(hops={hops},bins={bins})"),
    }
}

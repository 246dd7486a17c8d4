//! Seeded k-means with k-means++ seeding and Lloyd refinement.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Lloyd stops once no centroid moves farther than this.
    pub tol: f64,
    /// Independent seeded restarts; the lowest-inertia run wins.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 100,
            seed: 0,
            max_iters: 300,
            tol: 1e-8,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Number of distinct rows (exact comparison).
pub fn distinct_rows(points: ArrayView2<'_, f64>) -> usize {
    Unique::new(points).weights.len()
}

/// Distinct rows with their multiplicities, in first-occurrence order.
struct Unique {
    /// Row-major `len x dim` values.
    values: Vec<f64>,
    dim: usize,
    weights: Vec<f64>,
    /// Unique index of every input row.
    index_of: Vec<usize>,
}

impl Unique {
    fn new(points: ArrayView2<'_, f64>) -> Self {
        let dim = points.ncols();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut values = Vec::new();
        let mut weights = Vec::new();
        let index_of = points
            .outer_iter()
            .map(|row| {
                let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
                *seen
                    .entry(key)
                    .and_modify(|u| weights[*u] += 1.0)
                    .or_insert_with(|| {
                        values.extend(row.iter());
                        weights.push(1.0);
                        weights.len() - 1
                    })
            })
            .collect();
        Self {
            values,
            dim,
            weights,
            index_of,
        }
    }

    fn len(&self) -> usize {
        self.weights.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding over weighted points.
fn plus_plus_seeds(pts: &Unique, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = pts.len();
    let total_w: f64 = pts.weights.iter().sum();
    let first = {
        let mut target = rng.random::<f64>() * total_w;
        let mut pick = n - 1;
        for (i, &w) in pts.weights.iter().enumerate() {
            if target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        pick
    };
    let mut chosen = vec![first];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(pts.row(i), pts.row(first))).collect();
    while chosen.len() < k {
        let mass: Vec<f64> = d2.iter().zip(&pts.weights).map(|(d, w)| d * w).collect();
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &m) in mass.iter().enumerate() {
            if m > 0.0 && target < m {
                pick = i;
                break;
            }
            target -= m;
        }
        // Guard against rounding landing on a zero-mass tail entry.
        if mass[pick] <= 0.0 {
            pick = mass.iter().rposition(|&m| m > 0.0).expect("total > 0");
        }
        chosen.push(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(pts.row(i), pts.row(pick)));
        }
    }
    chosen.iter().flat_map(|&i| pts.row(i).iter().copied()).collect()
}

struct Run {
    assignments: Vec<usize>,
    centroids: Vec<f64>,
    inertia: f64,
    iterations: usize,
}

fn lloyd(pts: &Unique, mut centroids: Vec<f64>, max_iters: usize, tol: f64) -> Run {
    let (n, dim) = (pts.len(), pts.dim);
    let k = centroids.len() / dim;
    let mut assignments = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        for i in 0..n {
            let (c, d) = nearest(pts.row(i), &centroids, dim);
            assignments[i] = c;
            dists[i] = d;
        }

        let mut sums = vec![0.0; k * dim];
        let mut mass = vec![0.0; k];
        for i in 0..n {
            let (c, w) = (assignments[i], pts.weights[i]);
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(pts.row(i)) {
                *s += w * x;
            }
            mass[c] += w;
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            let next: Vec<f64> = if mass[c] > 0.0 {
                sums[c * dim..(c + 1) * dim].iter().map(|s| s / mass[c]).collect()
            } else {
                // Re-seed an empty cluster at the point worst served so far.
                let far = dists
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |best, (i, &d)| if d > best.1 { (i, d) } else { best })
                    .0;
                dists[far] = 0.0;
                pts.row(far).to_vec()
            };
            let slot = &mut centroids[c * dim..(c + 1) * dim];
            shift = shift.max(sq_dist(slot, &next).sqrt());
            slot.copy_from_slice(&next);
        }
        if shift < tol {
            break;
        }
    }

    let mut inertia = 0.0;
    for i in 0..n {
        let (c, d) = nearest(pts.row(i), &centroids, dim);
        assignments[i] = c;
        inertia += pts.weights[i] * d;
    }
    Run {
        assignments,
        centroids,
        inertia,
        iterations,
    }
}

/// Clusters the rows of `points`. `k` is clamped to the number of distinct
/// rows. Deterministic for a fixed config.
///
/// Duplicate rows are clustered once, weighted by their multiplicity, which
/// gives the same objective as clustering every row.
pub fn kmeans(points: ArrayView2<'_, f64>, config: &KMeansConfig) -> KMeansResult {
    assert!(points.nrows() > 0, "kmeans needs at least one point");
    assert!(config.k >= 1, "k must be at least 1");
    let pts = Unique::new(points);
    let k = if config.k > pts.len() {
        log::warn!(
            "kmeans: k = {} exceeds {} distinct feature rows; clamping",
            config.k,
            pts.len()
        );
        pts.len()
    } else {
        config.k
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<Run> = None;
    for _ in 0..config.restarts.max(1) {
        let seeds = plus_plus_seeds(&pts, k, &mut rng);
        let run = lloyd(&pts, seeds, config.max_iters, config.tol);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let k = best.centroids.len() / pts.dim.max(1);
    KMeansResult {
        assignments: pts.index_of.iter().map(|&u| best.assignments[u]).collect(),
        centroids: Array2::from_shape_vec((k, pts.dim), best.centroids).expect("k x dim buffer"),
        inertia: best.inertia,
        iterations: best.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cfg(k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn separated_clouds() {
        let mut pts = Vec::new();
        for i in 0..20 {
            let j = (i as f64) * 0.01;
            pts.push([j, -j]);
            pts.push([10.0 + j, 10.0 + j]);
        }
        let points = Array2::from_shape_fn((40, 2), |(i, c)| pts[i][c]);
        let r = kmeans(points.view(), &cfg(2, 9));
        for i in (0..40).step_by(2) {
            assert_eq!(r.assignments[i], r.assignments[0]);
            assert_eq!(r.assignments[i + 1], r.assignments[1]);
        }
        assert_ne!(r.assignments[0], r.assignments[1]);
    }

    #[test]
    fn identical_rows_collapse_to_one_cluster() {
        let points = Array2::from_elem((12, 3), 0.25);
        let r = kmeans(points.view(), &cfg(5, 1));
        assert_eq!(r.centroids.nrows(), 1);
        assert!(r.assignments.iter().all(|&a| a == 0));
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let points = Array2::from_shape_fn((50, 3), |(i, j)| ((i * 31 + j * 17) % 13) as f64);
        let a = kmeans(points.view(), &cfg(4, 3));
        let b = kmeans(points.view(), &cfg(4, 3));
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
    }

    #[test]
    fn k_clamped_to_distinct_rows() {
        let points = array![[0.0], [0.0], [1.0], [1.0], [2.0]];
        let r = kmeans(points.view(), &cfg(10, 0));
        assert_eq!(r.centroids.nrows(), 3);
        assert_eq!(distinct_rows(points.view()), 3);
    }

    /// Exhaustive optimum over all 2-partitions, each side at its mean.
    fn brute_force_two_means(points: &Array2<f64>) -> f64 {
        let n = points.nrows();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) - 1 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<usize> = (0..n).filter(|&i| ((mask >> i) & 1 == 1) == side).collect();
                let mut mean = vec![0.0; points.ncols()];
                for &i in &members {
                    for c in 0..points.ncols() {
                        mean[c] += points[[i, c]] / members.len() as f64;
                    }
                }
                for &i in &members {
                    for c in 0..points.ncols() {
                        cost += (points[[i, c]] - mean[c]).powi(2);
                    }
                }
            }
            best = best.min(cost);
        }
        best
    }

    #[test]
    fn near_optimal_on_small_sets() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..40 {
            let n = rng.random_range(3..=8);
            let points = Array2::from_shape_fn((n, 2), |_| rng.random_range(-5.0..5.0));
            let r = kmeans(points.view(), &cfg(2, trial));
            let opt = brute_force_two_means(&points);
            assert!(r.inertia <= 1.05 * opt + 1e-12, "trial {trial}: {} vs {opt}", r.inertia);
        }
    }
}

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{generated, DatasetBundle};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Synthetic seller/buyer transaction graph with a small planted class of
/// risky sellers.
///
/// Normal sellers trade with regular buyers who each buy from one to four
/// sellers. Each risky seller receives a burst of transactions from buyers
/// that appear nowhere else (degree one), plus a few regular buyers as cover.
/// Label 1 marks risky sellers; every other node is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SellerConfig {
    pub n: usize,
    pub risky_fraction: f64,
    /// Share of nodes that are normal sellers.
    pub seller_fraction: f64,
    pub burst_min: usize,
    pub burst_max: usize,
    pub seed: u64,
}

impl Default for SellerConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            risky_fraction: 0.02,
            seller_fraction: 0.08,
            burst_min: 8,
            burst_max: 14,
            seed: 0,
        }
    }
}

pub fn generate_imbalanced_seller_graph(config: &SellerConfig) -> Result<DatasetBundle> {
    let c = config;
    if !(c.risky_fraction > 0.0 && c.risky_fraction < 0.5) {
        return Err(Error::Input(format!(
            "risky_fraction must be in (0, 0.5), got {}",
            c.risky_fraction
        )));
    }
    if c.burst_min == 0 || c.burst_min > c.burst_max {
        return Err(Error::Input("burst sizes must satisfy 1 <= burst_min <= burst_max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let risky = ((c.n as f64) * c.risky_fraction).round().max(1.0) as usize;
    let sellers = ((c.n as f64) * c.seller_fraction).round().max(1.0) as usize;
    let bursts: Vec<usize> = (0..risky).map(|_| rng.random_range(c.burst_min..=c.burst_max)).collect();
    let burst_total: usize = bursts.iter().sum();
    let used = risky + sellers + burst_total;
    if used >= c.n {
        return Err(Error::Input(format!(
            "n = {} leaves no regular buyers after {used} sellers and burst buyers",
            c.n
        )));
    }
    let regular = c.n - used;

    // Layout: [risky | sellers | burst buyers | regular buyers].
    let seller_base = risky;
    let burst_base = seller_base + sellers;
    let buyer_base = burst_base + burst_total;
    let mut edges = Vec::new();
    let mut next_burst = burst_base;
    for (r, &size) in bursts.iter().enumerate() {
        for b in next_burst..next_burst + size {
            edges.push((r, b));
        }
        next_burst += size;
        for _ in 0..rng.random_range(1..=3) {
            edges.push((r, buyer_base + rng.random_range(0..regular)));
        }
    }
    for b in buyer_base..c.n {
        let k = rng.random_range(1..=4usize).min(sellers);
        for s in index::sample(&mut rng, sellers, k) {
            edges.push((b, seller_base + s));
        }
    }

    let mut perm: Vec<usize> = (0..c.n).collect();
    perm.shuffle(&mut rng);
    let edges: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
    let mut labels = vec![0; c.n];
    for &p in &perm[..risky] {
        labels[p] = 1;
    }
    let graph = Graph::from_edges(c.n, &edges)?;
    let params = serde_json::to_value(c).expect("plain config serializes");
    Ok(generated("seller", graph, labels, params, c.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn risky_count_and_determinism() {
        let cfg = SellerConfig::default();
        let a = generate_imbalanced_seller_graph(&cfg).unwrap();
        assert_eq!(a.num_nodes(), 10_000);
        assert_eq!(a.class_counts(), vec![9_800, 200]);
        let b = generate_imbalanced_seller_graph(&cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.graph.edges(), b.graph.edges());
    }

    #[test]
    fn rejects_bad_fraction() {
        for f in [0.0, 0.5, 0.9] {
            let cfg = SellerConfig {
                risky_fraction: f,
                ..Default::default()
            };
            assert!(generate_imbalanced_seller_graph(&cfg).is_err());
        }
    }
}

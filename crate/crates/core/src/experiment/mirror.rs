//! Untrained embeddings of the mirrored karate network: do mirror pairs land
//! next to each other?

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::datasets::generate_mirrored_karate;
use crate::error::Result;
use crate::model::{argmax_rows, Ablation, DpGcnModel, GraphContext, ModelConfig, NodeFeatures};
use crate::roles::RoleAssignment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MirrorConfig {
    pub seeds: usize,
    pub first_seed: u64,
    /// Width of the final representation.
    pub hidden: usize,
    pub layers: usize,
    pub heads: usize,
}

impl Default for MirrorConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            first_seed: 0,
            hidden: 10,
            layers: 2,
            heads: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorSeedResult {
    pub seed: u64,
    /// Share of mirror pairs that are mutual nearest neighbors.
    pub full_mnn_rate: f64,
    pub gcn_mnn_rate: f64,
    /// Largest mirror-pair distance between topology-path rows, any layer.
    pub t_path_max_distance: f64,
    /// Largest mirror-pair distance of the topology-only final embedding.
    pub no_c_max_distance: f64,
}

/// Where a node's mirror sits among its neighbors in embedding space
/// (1 = nearest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRank {
    pub node: usize,
    pub mirror: usize,
    pub full_distance: f64,
    pub full_rank: usize,
    pub gcn_distance: f64,
    pub gcn_rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MirrorReport {
    pub config: MirrorConfig,
    pub per_seed: Vec<MirrorSeedResult>,
    pub mean_full_mnn_rate: f64,
    pub mean_gcn_mnn_rate: f64,
    /// Detail for the first seed.
    pub pair_ranks: Vec<PairRank>,
    #[serde(skip)]
    pub full_embedding: Array2<f64>,
    #[serde(skip)]
    pub gcn_embedding: Array2<f64>,
    /// Argmax of the softmax over the first seed's full embedding.
    pub cluster_ids: Vec<usize>,
}

fn distance(m: &Array2<f64>, a: usize, b: usize) -> f64 {
    m.row(a)
        .iter()
        .zip(m.row(b))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// 1 + the number of other nodes strictly closer to `a` than `b` is.
fn rank(m: &Array2<f64>, a: usize, b: usize) -> usize {
    let d = distance(m, a, b);
    1 + (0..m.nrows())
        .filter(|&c| c != a && c != b && distance(m, a, c) < d)
        .count()
}

fn mnn_rate(m: &Array2<f64>, mirror: &[usize]) -> f64 {
    let half = mirror.len() / 2;
    let hits = (0..half)
        .filter(|&v| rank(m, v, mirror[v]) == 1 && rank(m, mirror[v], v) == 1)
        .count();
    hits as f64 / half as f64
}

pub fn run_mirror_karate(config: &MirrorConfig) -> Result<MirrorReport> {
    let mk = generate_mirrored_karate();
    let n = mk.bundle.num_nodes();
    let member_of: Vec<usize> = (0..n).map(|v| v.min(mk.mirror_map[v])).collect();
    let roles = RoleAssignment::from_member_of(&member_of)?;
    let ctx = GraphContext::new(&mk.bundle.graph, &roles, NodeFeatures::Identity(n))?;
    let model_config = |ablation| ModelConfig {
        hidden: config.hidden,
        layers: config.layers,
        heads: config.heads,
        ablation,
        ..ModelConfig::new(n, mk.bundle.num_classes)
    };

    let mut per_seed = Vec::with_capacity(config.seeds);
    let mut detail = None;
    for k in 0..config.seeds {
        let seed = config.first_seed + k as u64;
        let full = DpGcnModel::new(model_config(Ablation::Full), seed)?.infer(&ctx)?;
        let gcn = DpGcnModel::new(model_config(Ablation::NoT), seed)?.infer(&ctx)?;
        let no_c = DpGcnModel::new(model_config(Ablation::NoC), seed)?.infer(&ctx)?;

        let pair_max = |m: &Array2<f64>| (0..n).map(|v| distance(m, v, mk.mirror_map[v])).fold(0.0, f64::max);
        let t_path_max_distance = full
            .layers
            .iter()
            .filter_map(|l| l.f_t.as_ref())
            .map(pair_max)
            .fold(0.0, f64::max);
        per_seed.push(MirrorSeedResult {
            seed,
            full_mnn_rate: mnn_rate(full.embedding(), &mk.mirror_map),
            gcn_mnn_rate: mnn_rate(gcn.embedding(), &mk.mirror_map),
            t_path_max_distance,
            no_c_max_distance: pair_max(no_c.embedding()),
        });
        if detail.is_none() {
            detail = Some((full.embedding().clone(), gcn.embedding().clone()));
        }
    }

    let (full_embedding, gcn_embedding) = detail.unwrap_or_default();
    let pair_ranks = if full_embedding.is_empty() {
        Vec::new()
    } else {
        (0..n)
            .map(|v| {
                let m = mk.mirror_map[v];
                PairRank {
                    node: v,
                    mirror: m,
                    full_distance: distance(&full_embedding, v, m),
                    full_rank: rank(&full_embedding, v, m),
                    gcn_distance: distance(&gcn_embedding, v, m),
                    gcn_rank: rank(&gcn_embedding, v, m),
                }
            })
            .collect()
    };
    // Softmax is monotone, so its argmax is the embedding's argmax.
    let cluster_ids = argmax_rows(&full_embedding);
    let mean = |f: fn(&MirrorSeedResult) -> f64| per_seed.iter().map(f).sum::<f64>() / per_seed.len().max(1) as f64;
    Ok(MirrorReport {
        config: *config,
        mean_full_mnn_rate: mean(|r| r.full_mnn_rate),
        mean_gcn_mnn_rate: mean(|r| r.gcn_mnn_rate),
        per_seed,
        pair_ranks,
        full_embedding,
        gcn_embedding,
        cluster_ids,
    })
}

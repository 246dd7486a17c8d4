use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{generated, DatasetBundle};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motif {
    Star,
    Ring,
    Clique,
}

/// Structural position of a node inside its motif. Labels of the planted
/// fixture are these types, compacted to the ones present.
const ROLE_TYPES: [&str; 4] = ["hub", "leaf", "ring", "clique"];

/// Disjoint motifs, optionally chained by a sparse backbone. Sizes count
/// nodes per motif.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedRoleConfig {
    pub stars: usize,
    pub star_size: usize,
    pub rings: usize,
    pub ring_size: usize,
    pub cliques: usize,
    pub clique_size: usize,
    /// Link the first node of each motif to the first node of the next.
    pub backbone: bool,
    pub seed: u64,
}

impl Default for PlantedRoleConfig {
    fn default() -> Self {
        Self {
            stars: 6,
            star_size: 6,
            rings: 4,
            ring_size: 6,
            cliques: 4,
            clique_size: 5,
            backbone: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedRoles {
    pub bundle: DatasetBundle,
    /// Name of every class id.
    pub class_names: Vec<String>,
    /// Motif instance each node belongs to.
    pub motif_of: Vec<usize>,
}

pub fn generate_planted_roles(config: &PlantedRoleConfig) -> Result<PlantedRoles> {
    let c = config;
    if (c.stars > 0 && c.star_size < 2) || (c.rings > 0 && c.ring_size < 3) || (c.cliques > 0 && c.clique_size < 2) {
        return Err(Error::Input(
            "planted roles: stars need 2+ nodes, rings 3+, cliques 2+".into(),
        ));
    }
    let mut edges = Vec::new();
    let mut role_type = Vec::new();
    let mut motif_of = Vec::new();
    let mut anchors = Vec::new();
    let mut motif = 0;
    let mut add_motif = |size: usize, kind: Motif, edges: &mut Vec<(usize, usize)>| {
        let base = role_type.len();
        anchors.push(base);
        for k in 0..size {
            role_type.push(match (kind, k) {
                (Motif::Star, 0) => 0,
                (Motif::Star, _) => 1,
                (Motif::Ring, _) => 2,
                (Motif::Clique, _) => 3,
            });
            motif_of.push(motif);
        }
        match kind {
            Motif::Star => edges.extend((1..size).map(|k| (base, base + k))),
            Motif::Ring => edges.extend((0..size).map(|k| (base + k, base + (k + 1) % size))),
            Motif::Clique => {
                for a in 0..size {
                    edges.extend((a + 1..size).map(|b| (base + a, base + b)));
                }
            }
        }
        motif += 1;
    };
    for _ in 0..c.stars {
        add_motif(c.star_size, Motif::Star, &mut edges);
    }
    for _ in 0..c.rings {
        add_motif(c.ring_size, Motif::Ring, &mut edges);
    }
    for _ in 0..c.cliques {
        add_motif(c.clique_size, Motif::Clique, &mut edges);
    }
    let n = role_type.len();
    if n == 0 {
        return Err(Error::Input("planted roles: no motifs requested".into()));
    }
    if c.backbone {
        edges.extend(anchors.windows(2).map(|w| (w[0], w[1])));
    }

    // Scatter node ids so that labels are not contiguous.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(c.seed));
    let edges: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
    let mut present: Vec<usize> = role_type.clone();
    present.sort_unstable();
    present.dedup();
    let mut labels = vec![0; n];
    let mut motifs = vec![0; n];
    for old in 0..n {
        labels[perm[old]] = present.binary_search(&role_type[old]).expect("collected above");
        motifs[perm[old]] = motif_of[old];
    }

    let graph = Graph::from_edges(n, &edges)?;
    let params = serde_json::to_value(c).expect("plain config serializes");
    Ok(PlantedRoles {
        bundle: generated("planted_roles", graph, labels, params, c.seed),
        class_names: present.iter().map(|&t| ROLE_TYPES[t].to_string()).collect(),
        motif_of: motifs,
    })
}

/// Two `size`-cliques joined by one bridge edge; labels are the clique ids.
pub fn generate_two_cliques(size: usize) -> Result<DatasetBundle> {
    if size < 2 {
        return Err(Error::Input("two cliques: size must be at least 2".into()));
    }
    let mut edges = Vec::new();
    for base in [0, size] {
        for a in 0..size {
            edges.extend((a + 1..size).map(|b| (base + a, base + b)));
        }
    }
    edges.push((size - 1, size));
    let labels = (0..2 * size).map(|i| usize::from(i >= size)).collect();
    let graph = Graph::from_edges(2 * size, &edges)?;
    Ok(generated("two_cliques", graph, labels, json!({ "size": size }), 0))
}

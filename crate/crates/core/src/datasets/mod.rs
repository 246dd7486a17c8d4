//! Public edge-list datasets and seeded synthetic fixtures.

mod karate;
mod loader;
mod seller;
mod synthetic;

pub use karate::{generate_mirrored_karate, karate_club, MirroredKarate, KARATE_CLUB_LABELS, KARATE_EDGES};
pub use loader::{build_manifest, known_stats, load_edgelist_dataset, DatasetManifest, DatasetStats, KnownStats, ManifestFile,
    KNOWN_DATASETS,};
pub use seller::{generate_imbalanced_seller_graph, SellerConfig};
pub use synthetic::{generate_planted_roles, generate_two_cliques, Motif, PlantedRoleConfig, PlantedRoles};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;

/// Where a bundle came from, in enough detail to rebuild it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Files {
        edges: PathBuf,
        labels: PathBuf,
        edges_sha256: String,
        labels_sha256: String,
    },
    Generator {
        generator: String,
        params: serde_json::Value,
        seed: u64,
    },
}

/// A labeled graph ready for training.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub name: String,
    pub graph: Graph,
    /// One class id per node, dense in `0..num_classes`.
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub provenance: Provenance,
    /// Raw node id for every dense id (identity for generated graphs).
    pub original_ids: Vec<u64>,
    /// Non-fatal issues found while loading, such as statistics mismatches.
    pub warnings: Vec<String>,
}

impl DatasetBundle {
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

fn generated(name: &str, graph: Graph, labels: Vec<usize>, params: serde_json::Value, seed: u64) -> DatasetBundle {
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let original_ids = (0..graph.num_nodes() as u64).collect();
    DatasetBundle {
        name: name.to_string(),
        graph,
        labels,
        num_classes,
        provenance: Provenance::Generator {
            generator: name.to_string(),
            params,
            seed,
        },
        original_ids,
        warnings: Vec::new(),
    }
}

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DatasetBundle, Provenance};
use crate::error::{Error, Result};
use crate::graph::io::{read_edge_list, read_labels};
use crate::graph::Graph;
use crate::io::sha256_file;

/// Published size of a named dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KnownStats {
    pub name: &'static str,
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
}

pub const KNOWN_DATASETS: [KnownStats; 5] = [
    KnownStats { name: "euro", nodes: 399, edges: 5995, classes: 3 },
    KnownStats { name: "brazil", nodes: 131, edges: 1074, classes: 3 },
    KnownStats { name: "usa", nodes: 1190, edges: 13599, classes: 3 },
    KnownStats { name: "ba", nodes: 804, edges: 46410, classes: 5 },
    KnownStats { name: "cora", nodes: 2708, edges: 5429, classes: 7 },
];

/// Looks up a dataset by case-insensitive name.
pub fn known_stats(name: &str) -> Option<KnownStats> {
    let name = name.to_ascii_lowercase();
    KNOWN_DATASETS.into_iter().find(|k| k.name == name)
}

/// Loads an edge list with per-node labels.
///
/// Raw node ids may be sparse; they are renumbered densely in ascending
/// order. Raw class ids are compacted the same way. Every node that appears
/// in the edge list must carry a label. When `name` matches a known dataset,
/// observed counts are compared with the published ones and any mismatch is
/// recorded as a warning.
pub fn load_edgelist_dataset(name: &str, edge_path: &Path, label_path: &Path) -> Result<DatasetBundle> {
    let raw_edges = read_edge_list(edge_path)?;
    let raw_labels = read_labels(label_path)?;

    let mut label_of: BTreeMap<u64, usize> = BTreeMap::new();
    for &(node, class) in &raw_labels {
        if let Some(prev) = label_of.insert(node, class) {
            if prev != class {
                return Err(Error::Input(format!(
                    "{}: node {node} labeled both {prev} and {class}",
                    label_path.display()
                )));
            }
        }
    }
    for &(a, b) in &raw_edges {
        for v in [a, b] {
            if !label_of.contains_key(&v) {
                return Err(Error::Input(format!(
                    "{}: node {v} has no label in {}",
                    edge_path.display(),
                    label_path.display()
                )));
            }
        }
    }

    let original_ids: Vec<u64> = label_of.keys().copied().collect();
    let dense = |raw: u64| original_ids.binary_search(&raw).expect("every node is labeled");
    let mut classes: Vec<usize> = label_of.values().copied().collect();
    classes.sort_unstable();
    classes.dedup();
    let labels: Vec<usize> = label_of
        .values()
        .map(|c| classes.binary_search(c).expect("collected above"))
        .collect();

    let edges: Vec<(usize, usize)> = raw_edges.iter().map(|&(a, b)| (dense(a), dense(b))).collect();
    // A file listing some edges in both directions is a directed edge list;
    // any edge it gives only one way is made undirected.
    let listed: HashSet<(usize, usize)> = edges.iter().copied().filter(|(a, b)| a != b).collect();
    let one_way = listed.iter().filter(|&&(a, b)| !listed.contains(&(b, a))).count();
    let directed = one_way < listed.len();
    let graph = Graph::from_edges(original_ids.len(), &edges)?;

    let mut warnings = Vec::new();
    if directed && one_way > 0 {
        warnings.push(format!(
            "{one_way} edges appear in one direction only; the graph is symmetrized"
        ));
    }
    if let Some(k) = known_stats(name) {
        let observed = [
            ("nodes", graph.num_nodes(), k.nodes),
            ("edges", graph.num_edges(), k.edges),
            ("classes", classes.len(), k.classes),
        ];
        for (what, got, want) in observed {
            if got != want {
                warnings.push(format!("{name}: observed {got} {what}, expected {want}"));
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(DatasetBundle {
        name: name.to_string(),
        num_classes: classes.len(),
        graph,
        labels,
        provenance: Provenance::Files {
            edges: edge_path.to_path_buf(),
            labels: label_path.to_path_buf(),
            edges_sha256: sha256_file(edge_path)?,
            labels_sha256: sha256_file(label_path)?,
        },
        original_ids,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    /// Empty for published statistics.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_counts: Vec<usize>,
}

/// Summary written by the `ingest` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub files: Vec<ManifestFile>,
    pub expected: Option<DatasetStats>,
    pub observed: DatasetStats,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

pub fn build_manifest(bundle: &DatasetBundle) -> DatasetManifest {
    let files = match &bundle.provenance {
        Provenance::Files {
            edges,
            labels,
            edges_sha256,
            labels_sha256,
        } => vec![
            ManifestFile {
                role: "edges".into(),
                path: edges.clone(),
                sha256: edges_sha256.clone(),
            },
            ManifestFile {
                role: "labels".into(),
                path: labels.clone(),
                sha256: labels_sha256.clone(),
            },
        ],
        Provenance::Generator { .. } => Vec::new(),
    };
    DatasetManifest {
        name: bundle.name.clone(),
        files,
        expected: known_stats(&bundle.name).map(|k| DatasetStats {
            nodes: k.nodes,
            edges: k.edges,
            classes: k.classes,
            class_counts: Vec::new(),
        }),
        observed: DatasetStats {
            nodes: bundle.graph.num_nodes(),
            edges: bundle.graph.num_edges(),
            classes: bundle.num_classes,
            class_counts: bundle.class_counts(),
        },
        warnings: bundle.warnings.clone(),
        provenance: bundle.provenance.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn sparse_ids_are_renumbered() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "g.edgelist", "10 30\n30 20\n# comment\n20 10\n");
        let l = write(dir.path(), "labels.txt", "node label\n10 7\n20 3\n30 7\n40 3\n");
        let b = load_edgelist_dataset("toy", &e, &l).unwrap();
        assert_eq!(b.original_ids, vec![10, 20, 30, 40]);
        assert_eq!(b.labels, vec![1, 0, 1, 0]);
        assert_eq!(b.num_classes, 2);
        assert_eq!(b.graph.num_edges(), 3);
        assert_eq!(b.graph.degree(3), 0);
        assert!(b.warnings.is_empty());
    }

    #[test]
    fn known_dataset_mismatch_is_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "g", "0 1\n");
        let l = write(dir.path(), "l", "0 0\n1 1\n");
        let b = load_edgelist_dataset("Brazil", &e, &l).unwrap();
        assert_eq!(b.warnings.len(), 3);
        assert!(b.warnings[0].contains("expected 131"));
        let m = build_manifest(&b);
        assert_eq!(m.files.len(), 2);
        assert_eq!(m.expected.unwrap().edges, 1074);
    }

    #[test]
    fn malformed_line_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "g", "0 1\n1 x\n");
        let l = write(dir.path(), "l", "0 0\n1 1\n");
        match load_edgelist_dataset("toy", &e, &l) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unlabeled_node_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "g", "0 1\n1 2\n");
        let l = write(dir.path(), "l", "0 0\n1 1\n");
        assert!(load_edgelist_dataset("toy", &e, &l).is_err());
    }
}

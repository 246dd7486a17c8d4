use serde_json::json;

use super::{generated, DatasetBundle};
use crate::graph::Graph;

/// Zachary's karate club: 34 members, 78 friendships.
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11),
    (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13),
    (1, 17), (1, 19), (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27),
    (2, 28), (2, 32), (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
    (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33), (15, 32), (15, 33),
    (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33), (23, 25), (23, 27), (23, 29),
    (23, 32), (23, 33), (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33), (27, 33), (28, 31),
    (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
];

/// Faction after the split: 0 for the instructor's group, 1 for the
/// administrator's.
pub const KARATE_CLUB_LABELS: [usize; 34] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1,
];

pub fn karate_club() -> DatasetBundle {
    let graph = Graph::from_edges(34, &KARATE_EDGES).expect("embedded edge list is valid");
    generated("karate", graph, KARATE_CLUB_LABELS.to_vec(), json!({}), 0)
}

/// Two disjoint copies of the karate club.
#[derive(Debug, Clone)]
pub struct MirroredKarate {
    pub bundle: DatasetBundle,
    /// `mirror_map[v]` is the copy of `v` in the other half.
    pub mirror_map: Vec<usize>,
}

/// Node `i` of the original is paired with node `i + 34` of the copy. No edge
/// crosses between the copies.
pub fn generate_mirrored_karate() -> MirroredKarate {
    const N: usize = 34;
    let edges: Vec<(usize, usize)> = KARATE_EDGES
        .iter()
        .copied()
        .chain(KARATE_EDGES.iter().map(|&(a, b)| (a + N, b + N)))
        .collect();
    let graph = Graph::from_edges(2 * N, &edges).expect("valid by construction");
    let labels = KARATE_CLUB_LABELS.iter().chain(KARATE_CLUB_LABELS.iter()).copied().collect();
    let mirror_map = (0..2 * N).map(|v| (v + N) % (2 * N)).collect();
    MirroredKarate {
        bundle: generated("mirrored_karate", graph, labels, json!({ "copies": 2 }), 0),
        mirror_map,
    }
}

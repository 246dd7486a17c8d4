use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-node train/test assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMask {
    train: Vec<bool>,
}

impl SplitMask {
    pub fn from_train_flags(train: Vec<bool>) -> Self {
        Self { train }
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn is_train(&self, node: usize) -> bool {
        self.train[node]
    }

    pub fn train_mask(&self) -> &[bool] {
        &self.train
    }

    pub fn test_mask(&self) -> Vec<bool> {
        self.train.iter().map(|t| !t).collect()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.train.len()).filter(|&i| self.train[i]).collect()
    }

    pub fn test_indices(&self) -> Vec<usize> {
        (0..self.train.len()).filter(|&i| !self.train[i]).collect()
    }

    pub fn num_train(&self) -> usize {
        self.train.iter().filter(|&&t| t).count()
    }
}

/// Stratified split with `fraction` of the nodes in train.
///
/// The overall train count is `round(fraction * n)`, shared out across classes
/// by largest remainder. Each class keeps at least one train node, and at least
/// one test node when it has two or more members.
pub fn make_split(labels: &[usize], fraction: f64, seed: u64) -> Result<SplitMask> {
    if labels.is_empty() {
        return Err(Error::Input("cannot split: no labeled nodes".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Input(format!("train fraction must be in (0, 1), got {fraction}")));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        members[y].push(i);
    }

    let target = (fraction * labels.len() as f64).round() as usize;
    let ideal: Vec<f64> = members.iter().map(|m| fraction * m.len() as f64).collect();
    let mut quota: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..num_classes).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (ideal[a] - ideal[a].floor(), ideal[b] - ideal[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(quota.iter().sum());
    for &c in order.iter().cycle().take(num_classes * 2) {
        if remaining == 0 {
            break;
        }
        if quota[c] < members[c].len() {
            quota[c] += 1;
            remaining -= 1;
        }
    }
    for (c, m) in members.iter().enumerate() {
        match m.len() {
            0 => {}
            1 => quota[c] = 1,
            len => quota[c] = quota[c].clamp(1, len - 1),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = vec![false; labels.len()];
    for (c, m) in members.iter_mut().enumerate() {
        m.shuffle(&mut rng);
        for &i in &m[..quota[c]] {
            train[i] = true;
        }
    }
    Ok(SplitMask { train })
}

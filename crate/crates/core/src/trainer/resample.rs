use serde::{Deserialize, Serialize};

use super::SplitMask;

/// Class-imbalance handling through per-node loss weights.
///
/// The majority class is the one with the most train nodes; every other class
/// is a minority class. `balance` overrides both ratios with
/// `majority_count / class_count`, giving each class the same total weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResampleConfig {
    pub oversample: f64,
    pub undersample: f64,
    pub balance: bool,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            oversample: 1.0,
            undersample: 1.0,
            balance: false,
        }
    }
}

/// `(node, class, weight)` loss targets for the train nodes.
pub fn resample_weights(
    split: &SplitMask,
    labels: &[usize],
    config: &ResampleConfig,
) -> Vec<(usize, usize, f64)> {
    let train = split.train_indices();
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; num_classes];
    for &i in &train {
        counts[labels[i]] += 1;
    }
    let majority = (0..num_classes)
        .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
        .unwrap_or(0);
    let weight = |c: usize| -> f64 {
        if config.balance {
            counts[majority] as f64 / counts[c] as f64
        } else if c == majority {
            config.undersample
        } else {
            config.oversample
        }
    };
    train.into_iter().map(|i| (i, labels[i], weight(labels[i]))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_unit_weight() {
        let labels = [0, 1, 0, 1];
        let split = SplitMask::from_train_flags(vec![true; 4]);
        let w = resample_weights(&split, &labels, &ResampleConfig::default());
        assert!(w.iter().all(|t| t.2 == 1.0));
    }

    #[test]
    fn balancing_ninety_ten() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
        let split = SplitMask::from_train_flags(vec![true; 100]);
        let cfg = ResampleConfig {
            balance: true,
            ..Default::default()
        };
        let w = resample_weights(&split, &labels, &cfg);
        assert_eq!(w[0].2, 1.0);
        assert_eq!(w[95].2, 9.0);
        let per_class = |c| w.iter().filter(|t| t.1 == c).map(|t| t.2).sum::<f64>();
        assert_eq!(per_class(0), per_class(1));
    }

    #[test]
    fn explicit_ratios() {
        let labels = [0, 0, 0, 1];
        let split = SplitMask::from_train_flags(vec![true, true, false, true]);
        let cfg = ResampleConfig {
            oversample: 3.0,
            undersample: 0.5,
            balance: false,
        };
        let w = resample_weights(&split, &labels, &cfg);
        assert_eq!(w, vec![(0, 0, 0.5), (1, 0, 0.5), (3, 1, 3.0)]);
    }
}

//! Accuracy and per-class / macro-averaged precision, recall and F1.
//!
//! Averages run over the classes that occur in either the truth or the
//! predictions of the evaluated nodes. A zero denominator counts as 0 and sets
//! [`EvalReport::undefined`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True members among the evaluated nodes.
    pub support: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub evaluated: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Classes included in the macro and weighted averages.
    pub averaged_classes: Vec<usize>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Support-weighted mean of per-class F1.
    pub weighted_f1: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Some precision, recall or F1 had a zero denominator.
    pub undefined: bool,
}

fn ratio(num: usize, den: usize, undefined: &mut bool) -> f64 {
    if den == 0 {
        *undefined = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `predictions` against `labels` over the nodes where `mask` is set.
pub fn evaluate(predictions: &[usize], labels: &[usize], mask: &[bool], num_classes: usize) -> Result<EvalReport> {
    if predictions.len() != labels.len() || mask.len() != labels.len() {
        return Err(shape_err(
            "evaluate",
            format!(
                "{} predictions, {} labels, {} mask entries",
                predictions.len(),
                labels.len(),
                mask.len()
            ),
        ));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    let mut evaluated = 0;
    for i in (0..labels.len()).filter(|&i| mask[i]) {
        let (y, p) = (labels[i], predictions[i]);
        if y >= num_classes || p >= num_classes {
            return Err(Error::Input(format!(
                "node {i}: class out of range (label {y}, prediction {p}, {num_classes} classes)"
            )));
        }
        confusion[y][p] += 1;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::Input("evaluation mask selects no nodes".into()));
    }

    let mut undefined = false;
    let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
    let mut per_class = Vec::with_capacity(num_classes);
    let mut averaged_classes = Vec::new();
    for c in 0..num_classes {
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        if support == 0 && predicted == 0 {
            per_class.push(ClassMetrics {
                class: c,
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
                support,
                predicted,
            });
            continue;
        }
        averaged_classes.push(c);
        let precision = ratio(tp, predicted, &mut undefined);
        let recall = ratio(tp, support, &mut undefined);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            undefined = true;
            0.0
        };
        per_class.push(ClassMetrics {
            class: c,
            precision,
            recall,
            f1,
            support,
            predicted,
        });
    }

    let k = averaged_classes.len() as f64;
    let mean = |get: fn(&ClassMetrics) -> f64| averaged_classes.iter().map(|&c| get(&per_class[c])).sum::<f64>() / k;
    let macro_precision = mean(|m| m.precision);
    let macro_recall = mean(|m| m.recall);
    let macro_f1 = mean(|m| m.f1);
    let weighted_f1 = averaged_classes
        .iter()
        .map(|&c| per_class[c].f1 * per_class[c].support as f64)
        .sum::<f64>()
        / evaluated as f64;

    Ok(EvalReport {
        evaluated,
        accuracy: correct as f64 / evaluated as f64,
        per_class,
        averaged_classes,
        macro_precision,
        macro_recall,
        macro_f1,
        weighted_f1,
        confusion,
        undefined,
    })
}

/// Report for predicting the most frequent masked class everywhere.
pub fn majority_baseline(labels: &[usize], mask: &[bool], num_classes: usize) -> Result<EvalReport> {
    let mut counts = vec![0usize; num_classes];
    for (i, &y) in labels.iter().enumerate() {
        if mask.get(i).copied().unwrap_or(false) && y < num_classes {
            counts[y] += 1;
        }
    }
    let majority = (0..num_classes).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap_or(0);
    evaluate(&vec![majority; labels.len()], labels, mask, num_classes)
}

impl EvalReport {
    /// Confusion matrix as CSV with a `truth\predicted` header row.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("truth");
        for c in 0..self.confusion.len() {
            write!(out, ",pred_{c}").unwrap();
        }
        out.push('\n');
        for (c, row) in self.confusion.iter().enumerate() {
            write!(out, "{c}").unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct() {
        let y = [0, 1, 2, 1];
        let r = evaluate(&y, &y, &[true; 4], 3).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
        assert!(!r.undefined);
    }

    #[test]
    fn constant_prediction_on_half_split() {
        let y = [0, 0, 1, 1];
        let r = evaluate(&[0; 4], &y, &[true; 4], 2).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.undefined);
        assert_eq!(r.confusion, vec![vec![2, 0], vec![2, 0]]);
    }

    #[test]
    fn masked_nodes_are_ignored() {
        let r = evaluate(&[0, 1, 1], &[0, 0, 1], &[true, false, true], 2).unwrap();
        assert_eq!(r.evaluated, 2);
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn absent_classes_are_not_averaged() {
        let r = evaluate(&[0, 1], &[0, 1], &[true, true], 5).unwrap();
        assert_eq!(r.averaged_classes, vec![0, 1]);
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(evaluate(&[0], &[0], &[false], 2).is_err());
        assert!(evaluate(&[0, 1], &[0], &[true], 2).is_err());
        assert!(evaluate(&[3], &[0], &[true], 2).is_err());
    }

    #[test]
    fn confusion_csv_layout() {
        let r = evaluate(&[1, 1], &[0, 1], &[true, true], 2).unwrap();
        assert_eq!(r.confusion_csv(), "truth,pred_0,pred_1\n0,0,1\n1,0,1\n");
    }
}

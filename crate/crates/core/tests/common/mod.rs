//! Oracles shared by the integration tests.
#![allow(dead_code)]

/// Scalar recount of every reported quantity, one class at a time.
pub fn counting_oracle(
    preds: &[usize],
    labels: &[usize],
    mask: &[bool],
    c: usize,
) -> (f64, Vec<(f64, f64, f64)>, f64) {
    let idx: Vec<usize> = (0..labels.len()).filter(|&i| mask[i]).collect();
    let correct = idx.iter().filter(|&&i| preds[i] == labels[i]).count();
    let mut per_class = Vec::new();
    let mut f1_sum = 0.0;
    let mut averaged = 0;
    for k in 0..c {
        let tp = idx.iter().filter(|&&i| preds[i] == k && labels[i] == k).count();
        let fp = idx.iter().filter(|&&i| preds[i] == k && labels[i] != k).count();
        let fn_ = idx.iter().filter(|&&i| preds[i] != k && labels[i] == k).count();
        let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        if tp + fp + fn_ > 0 {
            f1_sum += f;
            averaged += 1;
        }
        per_class.push((p, r, f));
    }
    (correct as f64 / idx.len() as f64, per_class, f1_sum / averaged as f64)
}

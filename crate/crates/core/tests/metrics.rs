mod common;

use common::counting_oracle;
use dpgcn::metrics::{evaluate, majority_baseline, EvalReport};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_matches_oracle(r: &EvalReport, preds: &[usize], labels: &[usize], mask: &[bool], c: usize) {
    let (acc, per_class, macro_f1) = counting_oracle(preds, labels, mask, c);
    assert_eq!(r.accuracy, acc);
    assert_eq!(r.macro_f1, macro_f1);
    for (m, &(p, rec, f)) in r.per_class.iter().zip(&per_class) {
        assert_eq!((m.precision, m.recall, m.f1), (p, rec, f), "class {}", m.class);
    }
}

#[test]
fn matches_counting_oracle_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let n = rng.random_range(1..200);
        let c = rng.random_range(2..6);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let mut mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
        mask[0] = true;
        let r = evaluate(&preds, &labels, &mask, c).unwrap();
        assert_matches_oracle(&r, &preds, &labels, &mask, c);
    }
}

#[test]
fn constant_predictor_on_balanced_set() {
    for c in 2..6 {
        let labels: Vec<usize> = (0..12 * c).map(|i| i % c).collect();
        let r = majority_baseline(&labels, &vec![true; labels.len()], c).unwrap();
        let majority_f1 = 2.0 * (1.0 / c as f64) / (1.0 / c as f64 + 1.0);
        assert!((r.macro_f1 - majority_f1 / c as f64).abs() < 1e-15);
    }
}

#[test]
fn report_serializes() {
    let r = evaluate(&[0, 1, 1], &[0, 1, 0], &[true; 3], 2).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: EvalReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

fn case() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, usize)> {
    (2usize..5, 1usize..60).prop_flat_map(|(c, n)| {
        (
            prop::collection::vec(0..c, n),
            prop::collection::vec(0..c, n),
            Just(c),
        )
    })
}

proptest! {
    #[test]
    fn order_does_not_matter((labels, preds, c) in case(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mask = vec![true; labels.len()];
        let a = evaluate(&preds, &labels, &mask, c).unwrap();
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let l2: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        let p2: Vec<usize> = order.iter().map(|&i| preds[i]).collect();
        let b = evaluate(&p2, &l2, &mask, c).unwrap();
        prop_assert_eq!(a.confusion, b.confusion);
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-15);
    }

    #[test]
    fn relabeling_permutes_confusion((labels, preds, c) in case(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut sigma: Vec<usize> = (0..c).collect();
        sigma.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mask = vec![true; labels.len()];
        let a = evaluate(&preds, &labels, &mask, c).unwrap();
        let l2: Vec<usize> = labels.iter().map(|&y| sigma[y]).collect();
        let p2: Vec<usize> = preds.iter().map(|&y| sigma[y]).collect();
        let b = evaluate(&p2, &l2, &mask, c).unwrap();
        for i in 0..c {
            for j in 0..c {
                prop_assert_eq!(a.confusion[i][j], b.confusion[sigma[i]][sigma[j]]);
            }
        }
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
    }

    #[test]
    fn bounded_and_consistent((labels, preds, c) in case()) {
        let mask = vec![true; labels.len()];
        let r = evaluate(&preds, &labels, &mask, c).unwrap();
        let total: usize = r.confusion.iter().flatten().sum();
        prop_assert_eq!(total, labels.len());
        for v in [r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1, r.weighted_f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

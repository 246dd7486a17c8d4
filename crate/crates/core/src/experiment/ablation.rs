//! Module-removal study: every ablation variant on paired seeds.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{prepare, train_prepared, ExperimentSpec, Prepared};
use crate::error::Result;
use crate::model::Ablation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Ablation,
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    /// Mean `(accuracy, macro_f1)` of one variant over seeds.
    pub fn mean(&self, variant: Ablation) -> Option<(f64, f64)> {
        let rows: Vec<_> = self.rows.iter().filter(|r| r.variant == variant).collect();
        if rows.is_empty() {
            return None;
        }
        let k = rows.len() as f64;
        Some((
            rows.iter().map(|r| r.accuracy).sum::<f64>() / k,
            rows.iter().map(|r| r.macro_f1).sum::<f64>() / k,
        ))
    }

    /// One row per variant and seed, then one `mean` row per variant.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,seed,accuracy,macro_f1\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.variant.name(), r.seed, r.accuracy, r.macro_f1).unwrap();
        }
        for v in Ablation::ALL {
            if let Some((acc, f1)) = self.mean(v) {
                writeln!(out, "{},mean,{acc},{f1}", v.name()).unwrap();
            }
        }
        out
    }
}

/// Trains `variants` on each seed. Roles and splits are shared across the
/// variants of a seed. Runs fan out over `threads` workers; the table order
/// and contents do not depend on the thread count.
pub fn run_ablation(
    spec: &ExperimentSpec,
    seeds: &[u64],
    variants: &[Ablation],
    threads: usize,
) -> Result<AblationTable> {
    let mut prepared: Vec<(ExperimentSpec, Prepared)> = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let s = ExperimentSpec { seed, ..spec.clone() };
        let p = prepare(&s)?;
        prepared.push((s, p));
    }

    let jobs: Vec<(usize, Ablation)> = (0..seeds.len())
        .flat_map(|i| variants.iter().map(move |&v| (i, v)))
        .collect();
    let results: Mutex<Vec<Option<Result<AblationRow>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let j = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(i, variant)) = jobs.get(j) else { break };
        let (base, prep) = &prepared[i];
        let mut s = base.clone();
        s.model.ablation = variant;
        let row = train_prepared(&s, prep).map(|o| {
            log::info!(
                "ablation {} seed {}: acc {:.4} macro-F1 {:.4}",
                variant.name(),
                s.seed,
                o.test_report.accuracy,
                o.test_report.macro_f1
            );
            AblationRow {
                variant,
                seed: s.seed,
                accuracy: o.test_report.accuracy,
                macro_f1: o.test_report.macro_f1,
            }
        });
        results.lock().expect("no worker panicked")[j] = Some(row);
    };
    std::thread::scope(|scope| {
        for _ in 1..threads.max(1) {
            scope.spawn(worker);
        }
        worker();
    });

    let rows = results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationTable { rows })
}

//! Training protocol: stratified splits, loss weighting for imbalanced
//! classes, and the full-graph training loop.

mod resample;
mod split;

pub use resample::{resample_weights, ResampleConfig};
pub use split::{make_split, SplitMask};

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::model::{argmax_rows, DpGcnModel, GraphContext};
use crate::numerics::{AdamConfig, AdamState, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub train_fraction: f64,
    pub epochs: usize,
    /// Stop after this many epochs without a new best train loss.
    pub patience: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub resample: ResampleConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.67,
            epochs: 300,
            patience: 50,
            seed: 0,
            adam: AdamConfig::default(),
            resample: ResampleConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Input(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        let r = self.resample;
        if r.oversample < 0.0 || r.undersample < 0.0 {
            return Err(Error::Input("resampling ratios must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub test_acc: f64,
    pub test_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainHistory {
    /// `epoch,loss,test_acc,test_macro_f1` CSV. Floats use the shortest
    /// round-trip representation, so equal runs give equal bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,test_acc,test_macro_f1\n");
        for r in &self.epochs {
            writeln!(out, "{},{},{},{}", r.epoch, r.loss, r.test_acc, r.test_macro_f1).unwrap();
        }
        out
    }
}

/// Trains `model` in place on the train nodes of `split` and restores the
/// parameters with the lowest train loss.
///
/// Each epoch runs one full-graph forward pass, takes the weighted NLL over
/// the train nodes, and applies one Adam step. Test metrics are read from the
/// same forward pass (or from a separate inference pass when dropout is on).
pub fn train(
    model: &mut DpGcnModel,
    ctx: &GraphContext,
    labels: &[usize],
    split: &SplitMask,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    if labels.len() != ctx.num_nodes || split.len() != ctx.num_nodes {
        return Err(Error::Input(format!(
            "{} labels and {} split entries for a graph of {} nodes",
            labels.len(),
            split.len(),
            ctx.num_nodes
        )));
    }
    let num_classes = model.config.num_classes;
    if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
        return Err(Error::Input(format!("label {bad} out of range for {num_classes} classes")));
    }
    let targets = resample_weights(split, labels, &config.resample);
    if targets.is_empty() {
        return Err(Error::Input("split has no train nodes".into()));
    }
    let test_mask = split.test_mask();
    let has_test = test_mask.iter().any(|&t| t);

    let mut adam = AdamState::new(config.adam, &model.params);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6472_6f70);
    let use_dropout = model.config.dropout > 0.0;
    let mut history = TrainHistory {
        epochs: Vec::with_capacity(config.epochs),
        best_epoch: None,
        stopped_early: false,
    };
    let mut best: Option<(f64, crate::numerics::ParamStore)> = None;
    let mut stale = 0;

    for epoch in 0..config.epochs {
        let mut tape = Tape::new();
        let vars = model.forward(&mut tape, ctx, use_dropout.then_some(&mut dropout_rng))?;
        let loss_var = tape.weighted_nll(vars.log_probs, &targets)?;
        let loss = tape.scalar(loss_var);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }

        let (test_acc, test_macro_f1) = if has_test {
            let preds = if use_dropout {
                model.infer(ctx)?.predictions()
            } else {
                argmax_rows(tape.value(vars.log_probs))
            };
            let r = evaluate(&preds, labels, &test_mask, num_classes)?;
            (r.accuracy, r.macro_f1)
        } else {
            (f64::NAN, f64::NAN)
        };
        history.epochs.push(EpochRecord {
            epoch,
            loss,
            test_acc,
            test_macro_f1,
        });
        log::debug!("epoch {epoch}: loss {loss:.6} test acc {test_acc:.4} macro-F1 {test_macro_f1:.4}");

        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, model.params.clone()));
            history.best_epoch = Some(epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                history.stopped_early = true;
                break;
            }
        }

        model.params.zero_grad();
        tape.backward(loss_var, &mut model.params)?;
        adam.step(&mut model.params);
    }

    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::model::{ModelConfig, NodeFeatures};
    use crate::roles::RoleAssignment;

    fn toy() -> (GraphContext, Vec<usize>) {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let roles = RoleAssignment::from_member_of(&[0, 0, 1, 1, 0, 0]).unwrap();
        let ctx = GraphContext::new(&g, &roles, NodeFeatures::Identity(6)).unwrap();
        (ctx, vec![0, 0, 0, 1, 1, 1])
    }

    fn small_model() -> DpGcnModel {
        let mut c = ModelConfig::new(6, 2);
        c.hidden = 4;
        c.heads = 2;
        DpGcnModel::new(c, 1).unwrap()
    }

    #[test]
    fn zero_epochs_leave_parameters_unchanged() {
        let (ctx, labels) = toy();
        let mut model = small_model();
        let before = model.params.clone();
        let split = make_split(&labels, 0.5, 0).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let h = train(&mut model, &ctx, &labels, &split, &cfg).unwrap();
        assert!(h.epochs.is_empty() && h.best_epoch.is_none());
        for id in before.ids() {
            assert_eq!(before.value(id), model.params.value(id));
        }
    }

    #[test]
    fn history_csv_header() {
        let (ctx, labels) = toy();
        let mut model = small_model();
        let split = make_split(&labels, 0.5, 0).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            ..Default::default()
        };
        let h = train(&mut model, &ctx, &labels, &split, &cfg).unwrap();
        let csv = h.to_csv();
        assert!(csv.starts_with("epoch,loss,test_acc,test_macro_f1\n0,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn rejects_mismatched_labels() {
        let (ctx, _) = toy();
        let mut model = small_model();
        let labels = vec![0, 1, 0];
        let split = SplitMask::from_train_flags(vec![true; 3]);
        assert!(train(&mut model, &ctx, &labels, &split, &TrainConfig::default()).is_err());
    }
}

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::tensor::ParamStore;

/// Adam hyperparameters. Weight decay is added to the gradient (L2 style).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

/// Moment buffers for every parameter of one store.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let zeros = || {
            params
                .ids()
                .map(|id| Array2::zeros(params.get(id).shape()))
                .collect::<Vec<_>>()
        };
        Self {
            config,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update from the accumulated gradients, then clears them.
    /// Parameters without a gradient are treated as having a zero gradient.
    pub fn step(&mut self, params: &mut ParamStore) {
        assert_eq!(self.first.len(), params.len(), "optimizer built for another store");
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bias1 = 1.0 - beta1.powi(self.step as i32);
        let bias2 = 1.0 - beta2.powi(self.step as i32);
        for (k, id) in params.ids().enumerate() {
            let tensor = params.get_mut(id);
            if !tensor.requires_grad {
                continue;
            }
            let grad = tensor.grad.take();
            let (m, v) = (&mut self.first[k], &mut self.second[k]);
            let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
                let g = g + weight_decay * *p;
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            };
            match &grad {
                Some(g) => Zip::from(&mut tensor.value)
                    .and(&mut *m)
                    .and(&mut *v)
                    .and(g)
                    .for_each(|p, m, v, &g| update(p, m, v, g)),
                None => Zip::from(&mut tensor.value)
                    .and(&mut *m)
                    .and(&mut *v)
                    .for_each(|p, m, v| update(p, m, v, 0.0)),
            }
        }
    }
}

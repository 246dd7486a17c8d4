use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DpGcnModel, GraphContext, HeadParams};
use crate::error::Result;
use crate::numerics::{ParamStore, Tape, Var};

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardVars {
    pub layers: Vec<LayerVars>,
    /// Classifier input after ELU and the optional row normalization.
    pub pre_classifier: Var,
    pub log_probs: Var,
}

#[derive(Debug, Clone)]
pub struct LayerVars {
    pub f_c: Option<Var>,
    pub roles: Option<Var>,
    pub f_t: Option<Var>,
    /// Per head: `n x 2` weights of the connectivity and topology outputs.
    pub attention: Vec<Var>,
    pub unified: Var,
    /// Sparse messages sent by the topology path in this layer.
    pub t_messages: usize,
}

/// Materialized values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardArtifacts {
    pub layers: Vec<LayerArtifacts>,
    pub pre_classifier: Array2<f64>,
    pub log_probs: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerArtifacts {
    pub f_c: Option<Array2<f64>>,
    pub roles: Option<Array2<f64>>,
    pub f_t: Option<Array2<f64>>,
    pub attention: Vec<Array2<f64>>,
    pub unified: Array2<f64>,
    pub t_messages: usize,
}

impl ForwardArtifacts {
    pub fn from_vars(tape: &Tape, vars: &ForwardVars) -> Self {
        let get = |v: Option<Var>| v.map(|v| tape.value(v).clone());
        Self {
            layers: vars
                .layers
                .iter()
                .map(|l| LayerArtifacts {
                    f_c: get(l.f_c),
                    roles: get(l.roles),
                    f_t: get(l.f_t),
                    attention: l.attention.iter().map(|&a| tape.value(a).clone()).collect(),
                    unified: tape.value(l.unified).clone(),
                    t_messages: l.t_messages,
                })
                .collect(),
            pre_classifier: tape.value(vars.pre_classifier).clone(),
            log_probs: tape.value(vars.log_probs).clone(),
        }
    }

    /// Final unified embedding.
    pub fn embedding(&self) -> &Array2<f64> {
        &self.layers.last().expect("at least one layer").unified
    }

    pub fn predictions(&self) -> Vec<usize> {
        argmax_rows(&self.log_probs)
    }
}

pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.outer_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                .0
        })
        .collect()
}

/// Connectivity convolution `relu(A_hat * H * W)`. `input = None` means the
/// initial features.
pub fn c_gcn(tape: &mut Tape, ctx: &GraphContext, input: Option<Var>, w: Var) -> Result<Var> {
    let hw = ctx.project(tape, input, w)?;
    let agg = tape.spmm(&ctx.connectivity, hw)?;
    Ok(tape.relu(agg))
}

/// Role convolution. Returns the role embeddings `relu(pool * H * W)` and
/// their per-node copies.
pub fn t_gcn(tape: &mut Tape, ctx: &GraphContext, input: Option<Var>, w: Var) -> Result<(Var, Var)> {
    let hw = ctx.project(tape, input, w)?;
    let pooled = tape.spmm(&ctx.role_pool, hw)?;
    let roles = tape.relu(pooled);
    let shared = tape.spmm(&ctx.role_share, roles)?;
    Ok((roles, shared))
}

/// Tape handles of one attention head's parameters.
#[derive(Debug, Clone, Copy)]
pub struct HeadVars {
    pub w_a: Var,
    pub w_q: Var,
    pub alpha: Var,
}

/// How the two path outputs are combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fusion {
    /// Per-node softmax over the two path scores.
    Attention { slope: f64 },
    /// Equal weights.
    Mean,
}

/// One fusion head: `elu(a_c * W f_c + a_t * W f_t)`, with the path weights
/// from a pairwise softmax of `leaky_relu(alpha . [W_q h || W f])`.
/// Returns the head output and, for attention, the `n x 2` weights.
pub fn attention_fuse(
    tape: &mut Tape,
    ctx: &GraphContext,
    input: Option<Var>,
    f_c: Var,
    f_t: Var,
    head: HeadVars,
    fusion: Fusion,
) -> Result<(Var, Option<Var>)> {
    let g_c = tape.matmul(f_c, head.w_a)?;
    let g_t = tape.matmul(f_t, head.w_a)?;
    let (mixed, weights) = match fusion {
        Fusion::Mean => {
            let sum = tape.add(g_c, g_t)?;
            (tape.scale(sum, 0.5), None)
        }
        Fusion::Attention { slope } => {
            let query = ctx.project(tape, input, head.w_q)?;
            let mut score = |g: Var| -> Result<Var> {
                let joined = tape.concat_cols(&[query, g])?;
                let raw = tape.matmul(joined, head.alpha)?;
                Ok(tape.leaky_relu(raw, slope))
            };
            let e_c = score(g_c)?;
            let e_t = score(g_t)?;
            let w = tape.softmax_pair(e_c, e_t)?;
            let a_c = tape.column(w, 0)?;
            let a_t = tape.column(w, 1)?;
            let wc = tape.row_scale(a_c, g_c)?;
            let wt = tape.row_scale(a_t, g_t)?;
            (tape.add(wc, wt)?, Some(w))
        }
    };
    Ok((tape.elu(mixed), weights))
}

/// `log_softmax(normalize?(elu(H)) * W)`. Returns the classifier input and
/// the log-probabilities.
pub fn classify(tape: &mut Tape, h: Var, w: Var, normalize: bool) -> Result<(Var, Var)> {
    let mut feats = tape.elu(h);
    if normalize {
        feats = tape.l2_normalize_rows(feats);
    }
    let logits = tape.matmul(feats, w)?;
    Ok((feats, tape.log_softmax_rows(logits)))
}

impl DpGcnModel {
    /// Records the full forward pass on `tape`. `dropout_rng` enables dropout
    /// (training mode) when the config asks for it.
    pub fn forward(
        &self,
        tape: &mut Tape,
        ctx: &GraphContext,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardVars> {
        self.forward_with(&self.params, tape, ctx, dropout_rng)
    }

    /// Like [`forward`](Self::forward) but reads weights from `params`, which
    /// must have this model's layout (used by gradient checks).
    pub fn forward_with(
        &self,
        params: &ParamStore,
        tape: &mut Tape,
        ctx: &GraphContext,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardVars> {
        let mut input: Option<Var> = None;
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let f_c = match layer.w_c {
                Some(w) => {
                    let w = tape.param(params, w);
                    Some(c_gcn(tape, ctx, input, w)?)
                }
                None => None,
            };

            let before = tape.message_count();
            let (roles, f_t) = match layer.w_t {
                Some(w) => {
                    let w = tape.param(params, w);
                    let (r, f) = t_gcn(tape, ctx, input, w)?;
                    (Some(r), Some(f))
                }
                None => (None, None),
            };
            let t_messages = tape.message_count() - before;

            let mut head_outputs = Vec::with_capacity(layer.heads.len());
            let mut attention = Vec::new();
            for head in &layer.heads {
                let (out, weights) = self.head_forward(params, tape, ctx, input, f_c, f_t, head)?;
                head_outputs.push(out);
                attention.extend(weights);
            }
            let mut unified = if head_outputs.len() == 1 {
                head_outputs[0]
            } else {
                tape.concat_cols(&head_outputs)?
            };
            if let Some(rng) = dropout_rng.as_deref_mut() {
                unified = self.dropout(tape, unified, rng)?;
            }
            layers.push(LayerVars {
                f_c,
                roles,
                f_t,
                attention,
                unified,
                t_messages,
            });
            input = Some(unified);
        }

        let h = input.expect("at least one layer");
        let w = tape.param(params, self.classifier);
        let (pre_classifier, log_probs) = classify(tape, h, w, self.config.normalize)?;
        Ok(ForwardVars {
            layers,
            pre_classifier,
            log_probs,
        })
    }

    fn head_forward(
        &self,
        params: &ParamStore,
        tape: &mut Tape,
        ctx: &GraphContext,
        input: Option<Var>,
        f_c: Option<Var>,
        f_t: Option<Var>,
        head: &HeadParams,
    ) -> Result<(Var, Option<Var>)> {
        let w_a = tape.param(params, head.w_a);
        match (f_c, f_t) {
            (Some(c), Some(t)) => {
                let fusion = if self.config.ablation.uses_attention() {
                    Fusion::Attention {
                        slope: self.config.leaky_slope,
                    }
                } else {
                    Fusion::Mean
                };
                let (w_q, alpha) = match fusion {
                    Fusion::Attention { .. } => {
                        let alpha = tape.param(params, head.alpha.expect("attention head has alpha"));
                        let w_q = head.w_q.map_or(w_a, |q| tape.param(params, q));
                        (w_q, alpha)
                    }
                    Fusion::Mean => (w_a, w_a),
                };
                attention_fuse(tape, ctx, input, c, t, HeadVars { w_a, w_q, alpha }, fusion)
            }
            (Some(f), None) | (None, Some(f)) => {
                let g = tape.matmul(f, w_a)?;
                Ok((tape.elu(g), None))
            }
            (None, None) => unreachable!("at least one path is always active"),
        }
    }

    fn dropout(&self, tape: &mut Tape, x: Var, rng: &mut ChaCha8Rng) -> Result<Var> {
        let p = self.config.dropout;
        if p <= 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - p);
        let mask = Array2::from_shape_simple_fn(tape.shape(x), || {
            if rng.random::<f64>() < p {
                0.0
            } else {
                keep
            }
        });
        let mask = tape.constant(mask);
        tape.mul(x, mask)
    }

    /// Inference-mode forward pass returning plain values.
    pub fn infer(&self, ctx: &GraphContext) -> Result<ForwardArtifacts> {
        let mut tape = Tape::new();
        let vars = self.forward(&mut tape, ctx, None)?;
        Ok(ForwardArtifacts::from_vars(&tape, &vars))
    }
}

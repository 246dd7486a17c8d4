//! The dual-path network: connectivity convolution, role convolution,
//! per-node attention fusion and the normalized log-softmax classifier.

mod checkpoint;
mod context;
mod forward;

pub use checkpoint::{Checkpoint, StoredTensor, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use context::{GraphContext, NodeFeatures};
pub use forward::{
    argmax_rows, attention_fuse, c_gcn, classify, t_gcn, ForwardArtifacts, ForwardVars, Fusion, HeadVars,
    LayerArtifacts, LayerVars,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{glorot_uniform, ParamId, ParamStore};

/// Module removal / simplification switches used by the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    /// Topology path only.
    NoC,
    /// Connectivity path only.
    NoT,
    /// Both paths, averaged with equal weights.
    NoAttention,
    SingleHead,
    SingleLayer,
}

impl Ablation {
    pub const ALL: [Ablation; 6] = [
        Ablation::Full,
        Ablation::NoC,
        Ablation::NoT,
        Ablation::NoAttention,
        Ablation::SingleHead,
        Ablation::SingleLayer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoC => "no_c",
            Ablation::NoT => "no_t",
            Ablation::NoAttention => "no_attention",
            Ablation::SingleHead => "single_head",
            Ablation::SingleLayer => "single_layer",
        }
    }

    pub fn uses_connectivity(self) -> bool {
        self != Ablation::NoC
    }

    pub fn uses_topology(self) -> bool {
        self != Ablation::NoT
    }

    pub fn uses_attention(self) -> bool {
        self.uses_connectivity() && self.uses_topology() && self != Ablation::NoAttention
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown ablation {s:?}")))
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Width of the input features (node count for identity features).
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    /// Attention heads in every layer but the last, which always has one.
    pub heads: usize,
    pub num_classes: usize,
    /// Row L2 normalization before the classifier.
    pub normalize: bool,
    pub leaky_slope: f64,
    /// Dropout on hidden representations during training; 0 disables it.
    pub dropout: f64,
    pub ablation: Ablation,
}

impl ModelConfig {
    pub fn new(input_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden: 120,
            layers: 2,
            heads: 4,
            num_classes,
            normalize: true,
            leaky_slope: 0.2,
            dropout: 0.0,
            ablation: Ablation::Full,
        }
    }

    /// Layer count after applying the ablation.
    pub fn effective_layers(&self) -> usize {
        match self.ablation {
            Ablation::SingleLayer => 1,
            _ => self.layers,
        }
    }

    pub fn heads_in_layer(&self, layer: usize) -> usize {
        if layer + 1 == self.effective_layers() || self.ablation == Ablation::SingleHead {
            1
        } else {
            self.heads
        }
    }

    pub fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.heads_in_layer(layer - 1) * self.hidden
        }
    }

    pub fn output_dim(&self) -> usize {
        self.heads_in_layer(self.effective_layers() - 1) * self.hidden
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Input(format!("model config: {m}")));
        if self.input_dim == 0 || self.hidden == 0 || self.num_classes == 0 {
            return bad("input_dim, hidden and num_classes must be positive");
        }
        if self.layers == 0 || self.heads == 0 {
            return bad("layers and heads must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        Ok(())
    }
}

/// Parameters of one attention head.
#[derive(Debug, Clone)]
pub struct HeadParams {
    /// Shared transform applied to both path outputs.
    pub w_a: ParamId,
    /// Transform for the previous unified embedding when its width differs
    /// from the path width; `None` means `w_a` is reused.
    pub w_q: Option<ParamId>,
    /// Scoring vector over `[query || path]`, shape `2*hidden x 1`.
    pub alpha: Option<ParamId>,
}

#[derive(Debug, Clone)]
pub struct LayerParams {
    pub w_c: Option<ParamId>,
    pub w_t: Option<ParamId>,
    pub heads: Vec<HeadParams>,
}

/// A dual-path network with its parameters.
#[derive(Debug, Clone)]
pub struct DpGcnModel {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub layers: Vec<LayerParams>,
    pub classifier: ParamId,
}

impl DpGcnModel {
    /// Builds a model with seeded Glorot-uniform weights.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let h = config.hidden;
        let ablation = config.ablation;
        let mut layers = Vec::new();
        for l in 0..config.effective_layers() {
            let d_in = config.layer_input_dim(l);
            let mut add = |name: String, r: usize, c: usize| {
                let value = glorot_uniform(r, c, &mut rng);
                params.add(name, value)
            };
            let w_c = ablation
                .uses_connectivity()
                .then(|| add(format!("layer{l}.w_c"), d_in, h));
            let w_t = ablation
                .uses_topology()
                .then(|| add(format!("layer{l}.w_t"), d_in, h));
            let heads = (0..config.heads_in_layer(l))
                .map(|k| {
                    let w_a = add(format!("layer{l}.head{k}.w_a"), h, h);
                    let (w_q, alpha) = if ablation.uses_attention() {
                        let w_q = (d_in != h).then(|| add(format!("layer{l}.head{k}.w_q"), d_in, h));
                        (w_q, Some(add(format!("layer{l}.head{k}.alpha"), 2 * h, 1)))
                    } else {
                        (None, None)
                    };
                    HeadParams { w_a, w_q, alpha }
                })
                .collect();
            layers.push(LayerParams { w_c, w_t, heads });
        }
        let classifier = params.add(
            "classifier",
            glorot_uniform(config.output_dim(), config.num_classes, &mut rng),
        );
        Ok(Self {
            config,
            params,
            layers,
            classifier,
        })
    }
}

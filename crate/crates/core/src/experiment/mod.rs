//! End-to-end runs: a serializable experiment description, the pipeline from
//! dataset to trained model, and the canned studies built on it.

mod ablation;
mod artifacts;
mod mirror;

pub use ablation::{run_ablation, AblationRow, AblationTable};
pub use artifacts::{embeddings_csv, roles_tsv};
pub use mirror::{run_mirror_karate, MirrorConfig, MirrorReport, MirrorSeedResult, PairRank};

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{
    generate_imbalanced_seller_graph, generate_mirrored_karate, generate_planted_roles, generate_two_cliques,
    karate_club, load_edgelist_dataset, DatasetBundle, PlantedRoleConfig, SellerConfig,
};
use crate::error::Result;
use crate::metrics::{evaluate, EvalReport};
use crate::model::{Ablation, DpGcnModel, GraphContext, ModelConfig, NodeFeatures};
use crate::roles::{discover_roles, extract_struct_features, RoleAssignment, RoleConfig, StructFeatures};
use crate::trainer::{make_split, train, SplitMask, TrainConfig, TrainHistory};

/// Which graph to run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetRef {
    EdgeList {
        name: String,
        edges: PathBuf,
        labels: PathBuf,
    },
    Karate,
    MirroredKarate,
    PlantedRoles(PlantedRoleConfig),
    TwoCliques { size: usize },
    Seller(SellerConfig),
}

impl DatasetRef {
    pub fn load(&self) -> Result<DatasetBundle> {
        match self {
            DatasetRef::EdgeList { name, edges, labels } => load_edgelist_dataset(name, edges, labels),
            DatasetRef::Karate => Ok(karate_club()),
            DatasetRef::MirroredKarate => Ok(generate_mirrored_karate().bundle),
            DatasetRef::PlantedRoles(c) => Ok(generate_planted_roles(c)?.bundle),
            DatasetRef::TwoCliques { size } => generate_two_cliques(*size),
            DatasetRef::Seller(c) => generate_imbalanced_seller_graph(c),
        }
    }
}

/// Initial node features fed to the first layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputFeatures {
    /// One-hot node ids.
    #[default]
    Identity,
    /// The structural descriptors used for role discovery.
    Structural,
}

/// Architecture part of an experiment; widths are filled in from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub hidden: usize,
    pub layers: usize,
    pub heads: usize,
    pub normalize: bool,
    pub leaky_slope: f64,
    pub dropout: f64,
    pub ablation: Ablation,
    pub input: InputFeatures,
}

impl Default for ModelSpec {
    fn default() -> Self {
        let c = ModelConfig::new(1, 1);
        Self {
            hidden: c.hidden,
            layers: c.layers,
            heads: c.heads,
            normalize: c.normalize,
            leaky_slope: c.leaky_slope,
            dropout: c.dropout,
            ablation: c.ablation,
            input: InputFeatures::Identity,
        }
    }
}

impl ModelSpec {
    pub fn config(&self, input_dim: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            input_dim,
            hidden: self.hidden,
            layers: self.layers,
            heads: self.heads,
            num_classes,
            normalize: self.normalize,
            leaky_slope: self.leaky_slope,
            dropout: self.dropout,
            ablation: self.ablation,
        }
    }
}

/// Everything needed to reproduce one run.
///
/// `seed` is the only source of randomness: role clustering, the split, weight
/// initialization and dropout each draw their own seed from it (see
/// [`SeedPlan`]). The seeds inside `roles` and `train` are overwritten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetRef,
    #[serde(default)]
    pub roles: RoleConfig,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub seed: u64,
    /// Where commands write their outputs. Not part of the checksum.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentSpec {
    pub fn new(dataset: DatasetRef) -> Self {
        Self {
            dataset,
            roles: RoleConfig::default(),
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            seed: 0,
            out_dir: default_out_dir(),
        }
    }

    /// SHA-256 of the canonical JSON of the spec without `out_dir`.
    pub fn checksum(&self) -> String {
        let mut value = serde_json::to_value(self).expect("spec serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("out_dir");
        }
        crate::io::sha256_hex(value.to_string().as_bytes())
    }

    pub fn seeds(&self) -> SeedPlan {
        SeedPlan::from_master(self.seed)
    }
}

/// Per-stage seeds derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master: u64,
    pub roles: u64,
    pub split: u64,
    pub init: u64,
    pub dropout: u64,
}

impl SeedPlan {
    pub fn from_master(master: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        Self {
            master,
            roles: rng.random(),
            split: rng.random(),
            init: rng.random(),
            dropout: rng.random(),
        }
    }
}

/// A dataset with its structural features, roles and model context.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub bundle: DatasetBundle,
    pub features: StructFeatures,
    pub roles: RoleAssignment,
    pub ctx: GraphContext,
}

/// Loads the dataset and discovers roles.
pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared> {
    let bundle = spec.dataset.load()?;
    let features = extract_struct_features(&bundle.graph, spec.roles.hops, spec.roles.bins);
    let role_cfg = RoleConfig {
        seed: spec.seeds().roles,
        ..spec.roles
    };
    let roles = discover_roles(&features, &role_cfg);
    prepare_with_roles(spec, bundle, features, roles)
}

/// Builds the context from given roles, e.g. roles read back from disk.
pub fn prepare_with_roles(
    spec: &ExperimentSpec,
    bundle: DatasetBundle,
    features: StructFeatures,
    roles: RoleAssignment,
) -> Result<Prepared> {
    let input = match spec.model.input {
        InputFeatures::Identity => NodeFeatures::Identity(bundle.num_nodes()),
        InputFeatures::Structural => NodeFeatures::Dense(features.matrix.clone()),
    };
    let ctx = GraphContext::new(&bundle.graph, &roles, input)?;
    Ok(Prepared {
        bundle,
        features,
        roles,
        ctx,
    })
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: DpGcnModel,
    pub split: SplitMask,
    pub history: TrainHistory,
    pub train_report: EvalReport,
    pub test_report: EvalReport,
}

/// Splits, builds a fresh model and trains it on `prepared`.
pub fn train_prepared(spec: &ExperimentSpec, prepared: &Prepared) -> Result<RunOutcome> {
    let seeds = spec.seeds();
    let bundle = &prepared.bundle;
    let split = make_split(&bundle.labels, spec.train.train_fraction, seeds.split)?;
    let config = spec.model.config(prepared.ctx.features.dim(), bundle.num_classes);
    let mut model = DpGcnModel::new(config, seeds.init)?;
    let train_cfg = TrainConfig {
        seed: seeds.dropout,
        ..spec.train
    };
    let history = train(&mut model, &prepared.ctx, &bundle.labels, &split, &train_cfg)?;
    let preds = model.infer(&prepared.ctx)?.predictions();
    let train_report = evaluate(&preds, &bundle.labels, split.train_mask(), bundle.num_classes)?;
    let test_report = evaluate(&preds, &bundle.labels, &split.test_mask(), bundle.num_classes)?;
    Ok(RunOutcome {
        model,
        split,
        history,
        train_report,
        test_report,
    })
}

/// [`prepare`] followed by [`train_prepared`].
pub fn run(spec: &ExperimentSpec) -> Result<(Prepared, RunOutcome)> {
    let prepared = prepare(spec)?;
    let outcome = train_prepared(spec, &prepared)?;
    Ok((prepared, outcome))
}

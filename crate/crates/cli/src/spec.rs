//! Experiment spec assembly: config file first, then command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use dpgcn::datasets::{PlantedRoleConfig, SellerConfig};
use dpgcn::experiment::{DatasetRef, ExperimentSpec, InputFeatures};
use dpgcn::model::Ablation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Edgelist,
    Karate,
    MirroredKarate,
    Planted,
    TwoCliques,
    Seller,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Identity,
    Structural,
}

/// Flags shared by every command that runs the pipeline. Each one overrides
/// the matching field of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// Experiment spec file (.json or .toml).
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub dataset: Option<DatasetKind>,
    /// Edge-list file for `--dataset edgelist`.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Label file for `--dataset edgelist`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Dataset name; known names (brazil, euro, usa, ba, cora) enable size checks.
    #[arg(long)]
    pub name: Option<String>,
    /// Node count for the seller graph.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Risky share for the seller graph.
    #[arg(long)]
    pub risky_fraction: Option<f64>,
    /// Generator seed for synthetic datasets.
    #[arg(long)]
    pub data_seed: Option<u64>,

    /// Number of roles.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,

    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub ablation: Option<Ablation>,
    #[arg(long, value_enum)]
    pub input: Option<InputKind>,

    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Loss weight of minority-class train nodes.
    #[arg(long)]
    pub oversample: Option<f64>,
    /// Loss weight of majority-class train nodes.
    #[arg(long)]
    pub undersample: Option<f64>,
    /// Weight every class to the same total.
    #[arg(long)]
    pub balance: bool,
}

pub fn read_spec_file(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        _ => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
    };
    Ok(spec)
}

impl SpecArgs {
    pub fn build(&self, seed: Option<u64>, out_dir: Option<&Path>) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => read_spec_file(path)?,
            None => ExperimentSpec::new(DatasetRef::Karate),
        };
        if let Some(kind) = self.dataset {
            spec.dataset = self.dataset_ref(kind)?;
        } else if self.config.is_none() && (self.edges.is_some() || self.labels.is_some()) {
            spec.dataset = self.dataset_ref(DatasetKind::Edgelist)?;
        }
        self.apply_generator_overrides(&mut spec.dataset);

        let set = |dst: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut spec.roles.k, self.k);
        set(&mut spec.roles.hops, self.hops);
        set(&mut spec.roles.bins, self.bins);
        set(&mut spec.model.hidden, self.hidden);
        set(&mut spec.model.layers, self.layers);
        set(&mut spec.model.heads, self.heads);
        set(&mut spec.train.epochs, self.epochs);
        set(&mut spec.train.patience, self.patience);
        if self.no_normalize {
            spec.model.normalize = false;
        }
        if let Some(d) = self.dropout {
            spec.model.dropout = d;
        }
        if let Some(a) = self.ablation {
            spec.model.ablation = a;
        }
        if let Some(i) = self.input {
            spec.model.input = match i {
                InputKind::Identity => InputFeatures::Identity,
                InputKind::Structural => InputFeatures::Structural,
            };
        }
        if let Some(lr) = self.lr {
            spec.train.adam.lr = lr;
        }
        if let Some(wd) = self.weight_decay {
            spec.train.adam.weight_decay = wd;
        }
        if let Some(f) = self.train_fraction {
            spec.train.train_fraction = f;
        }
        if let Some(o) = self.oversample {
            spec.train.resample.oversample = o;
        }
        if let Some(u) = self.undersample {
            spec.train.resample.undersample = u;
        }
        if self.balance {
            spec.train.resample.balance = true;
        }
        if let Some(s) = seed {
            spec.seed = s;
        }
        if let Some(dir) = out_dir {
            spec.out_dir = dir.to_path_buf();
        }
        spec.train.validate()?;
        Ok(spec)
    }

    fn dataset_ref(&self, kind: DatasetKind) -> Result<DatasetRef> {
        Ok(match kind {
            DatasetKind::Edgelist => {
                let (Some(edges), Some(labels)) = (&self.edges, &self.labels) else {
                    bail!("--dataset edgelist needs both --edges and --labels");
                };
                DatasetRef::EdgeList {
                    name: self.name.clone().unwrap_or_else(|| stem(edges)),
                    edges: edges.clone(),
                    labels: labels.clone(),
                }
            }
            DatasetKind::Karate => DatasetRef::Karate,
            DatasetKind::MirroredKarate => DatasetRef::MirroredKarate,
            DatasetKind::Planted => DatasetRef::PlantedRoles(PlantedRoleConfig::default()),
            DatasetKind::TwoCliques => DatasetRef::TwoCliques { size: 5 },
            DatasetKind::Seller => DatasetRef::Seller(SellerConfig::default()),
        })
    }

    fn apply_generator_overrides(&self, dataset: &mut DatasetRef) {
        match dataset {
            DatasetRef::PlantedRoles(c) => {
                if let Some(s) = self.data_seed {
                    c.seed = s;
                }
            }
            DatasetRef::Seller(c) => {
                if let Some(s) = self.data_seed {
                    c.seed = s;
                }
                if let Some(n) = self.nodes {
                    c.n = n;
                }
                if let Some(f) = self.risky_fraction {
                    c.risky_fraction = f;
                }
            }
            _ => {}
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string()
}

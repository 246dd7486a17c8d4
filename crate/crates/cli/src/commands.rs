//! Command implementations. Every output goes through an atomic write and is
//! listed with its SHA-256 in a per-command run record.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dpgcn::datasets::{build_manifest, load_edgelist_dataset, DatasetBundle};
use dpgcn::experiment::{
    embeddings_csv, prepare, prepare_with_roles, roles_tsv, run_ablation, run_mirror_karate, train_prepared,
    ExperimentSpec, MirrorConfig, MirrorReport,
};
use dpgcn::io::{sha256_hex, write_atomic};
use dpgcn::metrics::evaluate;
use dpgcn::model::{Ablation, Checkpoint, DpGcnModel};
use dpgcn::roles::{extract_struct_features, RoleAssignment};
use dpgcn::trainer::make_split;
use serde::Serialize;

use crate::{Cli, Command};

/// Collects written files for the run record.
struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `<command>.run.json` last so it covers every other output.
    fn finish(mut self, command: &str, spec: Option<&ExperimentSpec>) -> Result<()> {
        #[derive(Serialize)]
        struct RunRecord<'a> {
            command: &'a str,
            version: &'a str,
            spec_checksum: Option<String>,
            seeds: Option<dpgcn::experiment::SeedPlan>,
            outputs: &'a BTreeMap<String, String>,
        }
        let files = std::mem::take(&mut self.files);
        let record = RunRecord {
            command,
            version: env!("CARGO_PKG_VERSION"),
            spec_checksum: spec.map(ExperimentSpec::checksum),
            seeds: spec.map(ExperimentSpec::seeds),
            outputs: &files,
        };
        self.json(&format!("{command}.run.json"), &record)
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Ingest { edges, labels, name } => ingest(&edges, &labels, name, out_dir),
        Command::Roles { spec, features_csv } => {
            let spec = spec.build(seed, out_dir).context("building experiment spec")?;
            roles(&spec, features_csv)
        }
        Command::Train { spec } => {
            let spec = spec.build(seed, out_dir).context("building experiment spec")?;
            train(&spec)
        }
        Command::Eval { spec, checkpoint } => {
            let spec = spec.build(seed, out_dir).context("building experiment spec")?;
            eval(&spec, &checkpoint)
        }
        Command::Embed { spec, checkpoint } => {
            let spec = spec.build(seed, out_dir).context("building experiment spec")?;
            embed(&spec, &checkpoint)
        }
        Command::MirrorKarate { seeds, hidden } => {
            let cfg = MirrorConfig {
                seeds,
                first_seed: seed.unwrap_or(0),
                hidden,
                ..MirrorConfig::default()
            };
            mirror_karate(&cfg, out_dir.unwrap_or(Path::new("out")))
        }
        Command::Ablate {
            spec,
            seeds,
            variants,
            threads,
        } => {
            let spec = spec.build(seed, out_dir).context("building experiment spec")?;
            let variants = if variants.is_empty() { Ablation::ALL.to_vec() } else { variants };
            ablate(&spec, &seeds, &variants, threads)
        }
    }
}

fn ingest(edges: &Path, labels: &Path, name: Option<String>, out_dir: Option<&Path>) -> Result<()> {
    let name = name.unwrap_or_else(|| {
        edges
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset")
            .to_string()
    });
    let bundle = load_edgelist_dataset(&name, edges, labels).context("ingest: loading dataset")?;
    for w in &bundle.warnings {
        log::warn!("{w}");
    }
    let mut out = Outputs::new(out_dir.unwrap_or(Path::new("out")));
    out.json("manifest.json", &build_manifest(&bundle))?;
    out.finish("ingest", None)
}

fn roles(spec: &ExperimentSpec, features_csv: bool) -> Result<()> {
    let prepared = prepare(spec).context("roles: discovering roles")?;
    let bundle = &prepared.bundle;
    let mut out = Outputs::new(&spec.out_dir);
    out.write(
        "roles.tsv",
        roles_tsv(&bundle.original_ids, prepared.roles.member_of()).as_bytes(),
    )?;
    if features_csv {
        out.write(
            "features.csv",
            embeddings_csv(&bundle.original_ids, &prepared.features.matrix).as_bytes(),
        )?;
    }
    log::info!(
        "{} nodes in {} roles",
        prepared.roles.num_nodes(),
        prepared.roles.num_roles()
    );
    out.finish("roles", Some(spec))
}

fn train(spec: &ExperimentSpec) -> Result<()> {
    let prepared = prepare(spec).context("train: preparing dataset and roles")?;
    let outcome = train_prepared(spec, &prepared).context("train: training")?;
    let seeds = spec.seeds();
    let metadata = BTreeMap::from([
        ("spec_checksum".to_string(), spec.checksum()),
        ("dataset".to_string(), prepared.bundle.name.clone()),
        ("split_seed".to_string(), seeds.split.to_string()),
        ("train_fraction".to_string(), spec.train.train_fraction.to_string()),
    ]);
    let ckpt = outcome
        .model
        .to_checkpoint(prepared.roles.member_of(), metadata);

    let mut out = Outputs::new(&spec.out_dir);
    out.json("spec.json", spec)?;
    out.write("checkpoint.json", serde_json::to_string(&ckpt)?.as_bytes())?;
    out.write("history.csv", outcome.history.to_csv().as_bytes())?;
    out.json("eval.json", &outcome.test_report)?;
    log::info!(
        "test accuracy {:.4}, macro-F1 {:.4} on {} nodes",
        outcome.test_report.accuracy,
        outcome.test_report.macro_f1,
        outcome.test_report.evaluated
    );
    out.finish("train", Some(spec))
}

/// Dataset, roles and model restored from a checkpoint, checked for
/// consistency with the dataset named by the spec.
fn restore(spec: &ExperimentSpec, path: &Path) -> Result<(dpgcn::experiment::Prepared, DpGcnModel, Checkpoint)> {
    let ckpt = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let bundle: DatasetBundle = spec.dataset.load().context("loading dataset")?;
    let n = bundle.num_nodes();
    if ckpt.member_of.len() != n {
        bail!(
            "checkpoint was trained on {} nodes but the dataset has {n}",
            ckpt.member_of.len()
        );
    }
    if ckpt.config.num_classes != bundle.num_classes {
        bail!(
            "checkpoint predicts {} classes but the dataset has {}",
            ckpt.config.num_classes,
            bundle.num_classes
        );
    }
    let roles = RoleAssignment::from_member_of(&ckpt.member_of).context("checkpoint roles")?;
    let features = extract_struct_features(&bundle.graph, spec.roles.hops, spec.roles.bins);
    let prepared = prepare_with_roles(spec, bundle, features, roles)?;
    let dim = prepared.ctx.features.dim();
    if ckpt.config.input_dim != dim {
        bail!(
            "checkpoint expects input dimension {} but the {:?} features have dimension {dim}",
            ckpt.config.input_dim,
            spec.model.input
        );
    }
    let model = DpGcnModel::from_checkpoint(&ckpt).context("rebuilding model")?;
    Ok((prepared, model, ckpt))
}

fn eval(spec: &ExperimentSpec, checkpoint: &Path) -> Result<()> {
    let (prepared, model, ckpt) = restore(spec, checkpoint).context("eval: restoring checkpoint")?;
    let meta = |key: &str| ckpt.metadata.get(key).cloned();
    let split_seed = match meta("split_seed") {
        Some(s) => s.parse().context("checkpoint split_seed")?,
        None => spec.seeds().split,
    };
    let fraction = match meta("train_fraction") {
        Some(s) => s.parse().context("checkpoint train_fraction")?,
        None => spec.train.train_fraction,
    };
    let labels = &prepared.bundle.labels;
    let split = make_split(labels, fraction, split_seed).context("eval: rebuilding split")?;
    let preds = model
        .infer(&prepared.ctx)
        .context("eval: inference")?
        .predictions();
    let report = evaluate(&preds, labels, &split.test_mask(), prepared.bundle.num_classes).context("eval: scoring")?;

    let mut out = Outputs::new(&spec.out_dir);
    out.json("eval.json", &report)?;
    out.write("confusion.csv", report.confusion_csv().as_bytes())?;
    log::info!(
        "accuracy {:.4}, macro-F1 {:.4} on {} held-out nodes",
        report.accuracy,
        report.macro_f1,
        report.evaluated
    );
    out.finish("eval", Some(spec))
}

fn embed(spec: &ExperimentSpec, checkpoint: &Path) -> Result<()> {
    let (prepared, model, _) = restore(spec, checkpoint).context("embed: restoring checkpoint")?;
    let art = model.infer(&prepared.ctx).context("embed: inference")?;
    let mut out = Outputs::new(&spec.out_dir);
    out.write(
        "embeddings.csv",
        embeddings_csv(&prepared.bundle.original_ids, art.embedding()).as_bytes(),
    )?;
    out.finish("embed", Some(spec))
}

fn mirror_pairs_csv(report: &MirrorReport) -> String {
    let mut s = String::from("node,mirror,full_distance,full_rank,gcn_distance,gcn_rank\n");
    for p in &report.pair_ranks {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            p.node, p.mirror, p.full_distance, p.full_rank, p.gcn_distance, p.gcn_rank
        )
        .unwrap();
    }
    s
}

fn mirror_embeddings_csv(report: &MirrorReport) -> String {
    let m = &report.full_embedding;
    let mut s = String::from("node_id,cluster");
    for j in 0..m.ncols() {
        write!(s, ",dim_{j}").unwrap();
    }
    s.push('\n');
    for (i, row) in m.rows().into_iter().enumerate() {
        write!(s, "{i},{}", report.cluster_ids[i]).unwrap();
        for v in row {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

fn mirror_karate(cfg: &MirrorConfig, dir: &Path) -> Result<()> {
    let report = run_mirror_karate(cfg).context("mirror-karate: running study")?;
    let ids: Vec<u64> = (0..report.gcn_embedding.nrows() as u64).collect();
    let mut out = Outputs::new(dir);
    out.write("mirror_embeddings.csv", mirror_embeddings_csv(&report).as_bytes())?;
    out.write(
        "mirror_gcn_embeddings.csv",
        embeddings_csv(&ids, &report.gcn_embedding).as_bytes(),
    )?;
    out.write("mirror_pairs.csv", mirror_pairs_csv(&report).as_bytes())?;
    out.json("mirror_report.json", &report)?;
    log::info!(
        "mutual nearest mirror rate: dual-path {:.3}, plain GCN {:.3}",
        report.mean_full_mnn_rate,
        report.mean_gcn_mnn_rate
    );
    out.finish("mirror-karate", None)
}

fn ablate(spec: &ExperimentSpec, seeds: &[u64], variants: &[Ablation], threads: usize) -> Result<()> {
    if seeds.is_empty() {
        bail!("ablate needs at least one seed");
    }
    let table = run_ablation(spec, seeds, variants, threads.max(1)).context("ablate: training variants")?;
    let mut out = Outputs::new(&spec.out_dir);
    out.write("ablation.csv", table.to_csv().as_bytes())?;
    out.json("ablation.json", &table)?;
    for &v in variants {
        if let Some((acc, f1)) = table.mean(v) {
            log::info!("{:<13} accuracy {acc:.4} macro-F1 {f1:.4}", v.name());
        }
    }
    out.finish("ablate", Some(spec))
}

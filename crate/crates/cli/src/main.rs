//! `dpgcn`: ingest graphs, discover roles, train, evaluate and export
//! embeddings, plus the mirrored-karate and ablation studies.

mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpgcn::model::Ablation;

use spec::SpecArgs;

#[derive(Debug, Parser)]
#[command(name = "dpgcn", version, about = "Dual-path graph convolution experiments")]
struct Cli {
    /// Master seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: the spec's `out_dir`, else `out`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load an edge list with labels and write a dataset manifest.
    Ingest {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Discover structural roles and write `node_id<TAB>role_id`.
    Roles {
        #[command(flatten)]
        spec: SpecArgs,
        /// Also write the structural features as CSV.
        #[arg(long)]
        features_csv: bool,
    },
    /// Train a model and write the checkpoint and training history.
    Train {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Evaluate a checkpoint on the held-out nodes of its split.
    Eval {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Export the final unified embedding of a checkpoint.
    Embed {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Untrained embeddings of two mirrored karate clubs.
    MirrorKarate {
        /// Number of random initializations to average over.
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// Width of the final representation.
        #[arg(long, default_value_t = 10)]
        hidden: usize,
    },
    /// Train every ablation variant on paired seeds.
    Ablate {
        #[command(flatten)]
        spec: SpecArgs,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
        seeds: Vec<u64>,
        /// Comma-separated variants (default: all six).
        #[arg(long, value_delimiter = ',')]
        variants: Vec<Ablation>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

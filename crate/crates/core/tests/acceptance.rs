//! Acceptance suite. Runs every criterion in sequence, prints one status line
//! per criterion and exits nonzero if any criterion fails.
//!
//! Airline criteria need the public airline files. They are looked up in
//! `$DPGCN_DATA_DIR` or `data/airlines` at the workspace root (see
//! `scripts/fetch_airlines.sh`). Without them the airline ablation is reported
//! as UNVERIFIED and the absolute targets as SKIPPED. Set
//! `DPGCN_REQUIRE_AIRLINE=1` to turn missing data into a failure.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::counting_oracle;
use dpgcn::datasets::{PlantedRoleConfig, SellerConfig};
use dpgcn::experiment::{run, run_ablation, run_mirror_karate, DatasetRef, ExperimentSpec, MirrorConfig};
use dpgcn::graph::Graph;
use dpgcn::metrics::{evaluate, majority_baseline};
use dpgcn::model::{Ablation, DpGcnModel, GraphContext, ModelConfig, NodeFeatures};
use dpgcn::numerics::gradcheck::check_gradients;
use dpgcn::roles::RoleAssignment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Unverified,
    Skipped,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { status, detail }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Self {
            status: Status::Fail,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Outcome;

fn within(elapsed: Duration, limit_s: f64, what: &str, failures: &mut Vec<String>) {
    if elapsed.as_secs_f64() >= limit_s {
        failures.push(format!("{what} took {:.1} s (limit {limit_s} s)", elapsed.as_secs_f64()));
    }
}

fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    for i in 0..n {
        for j in i + 2..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let n = 10;
    let g = random_graph(n, 0.3, 11);
    let member_of: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let roles = RoleAssignment::from_member_of(&member_of).unwrap();
    let ctx = GraphContext::new(&g, &roles, NodeFeatures::Identity(n)).unwrap();
    let mut cfg = ModelConfig::new(n, 3);
    cfg.hidden = 6;
    cfg.layers = 2;
    cfg.heads = 2;
    let model = DpGcnModel::new(cfg, 5).unwrap();
    let targets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i * 7) % 3, 1.0)).collect();
    let mut store = model.params.clone();
    let report = check_gradients(&mut store, |s, t| {
        let vars = model.forward_with(s, t, &ctx, None)?;
        t.weighted_nll(vars.log_probs, &targets)
    })
    .unwrap();
    let mut failures = Vec::new();
    if report.max_rel_error >= 1e-4 {
        failures.push(format!("worst entry {:?}", report.worst));
    }
    within(start.elapsed(), 10.0, "check", &mut failures);
    Outcome::check(
        failures.is_empty(),
        format!(
            "max rel error {:.2e} over {} entries (limit 1e-4) {}",
            report.max_rel_error,
            report.entries_checked,
            failures.join("; ")
        ),
    )
}

fn algebraic_fixtures() -> Outcome {
    let mut failures = Vec::new();

    let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let dense = k3.normalize_adjacency().matrix.to_dense();
    if dense.iter().any(|&v| v != 1.0 / 3.0) {
        failures.push(format!("normalized K3 is {dense:?}"));
    }

    let mut worst_sum = 0.0f64;
    let mut worst_norm = 0.0f64;
    for seed in 0..5u64 {
        let n = 30;
        let g = random_graph(n, 0.15, seed);
        let member_of: Vec<usize> = (0..n).map(|i| (i * 5 + seed as usize) % 6).collect();
        let roles = RoleAssignment::from_member_of(&member_of).unwrap();
        let ctx = GraphContext::new(&g, &roles, NodeFeatures::Identity(n)).unwrap();
        let mut cfg = ModelConfig::new(n, 4);
        cfg.hidden = 8;
        cfg.layers = 3;
        let out = DpGcnModel::new(cfg, seed).unwrap().infer(&ctx).unwrap();
        for (l, layer) in out.layers.iter().enumerate() {
            for a in &layer.attention {
                for row in a.outer_iter() {
                    worst_sum = worst_sum.max((row.sum() - 1.0).abs());
                }
            }
            let ft = layer.f_t.as_ref().unwrap();
            for i in 0..n {
                for j in 0..i {
                    if member_of[i] == member_of[j] && ft.row(i) != ft.row(j) {
                        failures.push(format!("seed {seed} layer {l}: nodes {i} and {j} differ on the topology path"));
                    }
                }
            }
            if layer.t_messages != 2 * n {
                failures.push(format!("seed {seed} layer {l}: {} messages for {n} nodes", layer.t_messages));
            }
        }
        for row in out.pre_classifier.outer_iter() {
            worst_norm = worst_norm.max((row.dot(&row).sqrt() - 1.0).abs());
        }
    }
    if worst_sum >= 1e-12 {
        failures.push(format!("attention sum off by {worst_sum:.2e}"));
    }
    if worst_norm >= 1e-12 {
        failures.push(format!("pre-classifier norm off by {worst_norm:.2e}"));
    }
    Outcome::check(
        failures.is_empty(),
        format!(
            "K3 all 1/3, max |attention sum - 1| {worst_sum:.1e}, max |norm - 1| {worst_norm:.1e}, 2n messages {}",
            failures.join("; ")
        ),
    )
}

fn mirror_karate() -> Outcome {
    let start = Instant::now();
    let cfg = MirrorConfig::default();
    let report = match run_mirror_karate(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(e.to_string()),
    };
    let mut failures = Vec::new();
    if cfg.seeds < 20 || report.per_seed.len() != cfg.seeds {
        failures.push(format!("{} seeds", report.per_seed.len()));
    }
    let t_max = report.per_seed.iter().map(|s| s.t_path_max_distance).fold(0.0, f64::max);
    if t_max != 0.0 {
        failures.push(format!("topology-path mirror distance {t_max:e}"));
    }
    if report.mean_full_mnn_rate <= report.mean_gcn_mnn_rate {
        failures.push("dual-path rate not above plain GCN".into());
    }
    within(start.elapsed(), 30.0, "study", &mut failures);
    Outcome::check(
        failures.is_empty(),
        format!(
            "{} seeds, topology distance {t_max}, mutual-NN rate {:.3} vs GCN {:.3} {}",
            report.per_seed.len(),
            report.mean_full_mnn_rate,
            report.mean_gcn_mnn_rate,
            failures.join("; ")
        ),
    )
}

fn airline_dir() -> PathBuf {
    std::env::var_os("DPGCN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap();
            root.join("data/airlines")
        })
}

fn airline_spec(name: &str, stem: &str) -> Option<ExperimentSpec> {
    let dir = airline_dir();
    let edges = dir.join(format!("{stem}-airports.edgelist"));
    let labels = dir.join(format!("labels-{stem}-airports.txt"));
    (edges.exists() && labels.exists()).then(|| {
        ExperimentSpec::new(DatasetRef::EdgeList {
            name: name.into(),
            edges,
            labels,
        })
    })
}

fn missing_airline(what: &str, status: Status) -> Outcome {
    let required = std::env::var("DPGCN_REQUIRE_AIRLINE").is_ok_and(|v| v == "1");
    Outcome {
        status: if required { Status::Fail } else { status },
        detail: format!(
            "data unavailable: no {what} files under {} (run scripts/fetch_airlines.sh)",
            airline_dir().display()
        ),
    }
}

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn airline_ablation() -> Outcome {
    let Some(spec) = airline_spec("brazil", "brazil") else {
        return missing_airline("Brazil", Status::Unverified);
    };
    let start = Instant::now();
    let table = match run_ablation(&spec, &SEEDS, &[Ablation::Full, Ablation::NoT], threads()) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(e.to_string()),
    };
    let (_, full) = table.mean(Ablation::Full).unwrap();
    let (_, no_t) = table.mean(Ablation::NoT).unwrap();
    let mut failures = Vec::new();
    if full - no_t < 0.05 {
        failures.push("gap below 0.05".into());
    }
    within(start.elapsed(), 300.0, "ablation", &mut failures);
    Outcome::check(
        failures.is_empty(),
        format!("Brazil macro-F1 full {full:.3} vs no_t {no_t:.3} {}", failures.join("; ")),
    )
}

/// The same ablation direction on the planted-role fixture, which needs no
/// downloads. Reported alongside the airline check, never instead of it.
fn planted_ablation() -> Outcome {
    let mut spec = ExperimentSpec::new(DatasetRef::PlantedRoles(PlantedRoleConfig::default()));
    spec.roles.k = 4;
    spec.model.hidden = 32;
    spec.model.heads = 2;
    spec.train.epochs = 150;
    let table = match run_ablation(&spec, &SEEDS, &[Ablation::Full, Ablation::NoT], threads()) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(e.to_string()),
    };
    let (_, full) = table.mean(Ablation::Full).unwrap();
    let (_, no_t) = table.mean(Ablation::NoT).unwrap();
    Outcome::check(
        full - no_t >= 0.05,
        format!("planted-role macro-F1 full {full:.3} vs no_t {no_t:.3} over 5 seeds (need gap >= 0.05)"),
    )
}

fn airline_absolute() -> Outcome {
    let targets = [("brazil", "brazil", 0.60), ("euro", "europe", 0.55)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, stem, target) in targets {
        let Some(spec) = airline_spec(name, stem) else {
            return missing_airline(name, Status::Skipped);
        };
        let mut best = 0.0f64;
        for seed in SEEDS {
            match run(&ExperimentSpec { seed, ..spec.clone() }) {
                Ok((_, o)) => best = best.max(o.test_report.accuracy),
                Err(e) => return Outcome::fail(format!("{name} seed {seed}: {e}")),
            }
        }
        ok &= best >= target;
        parts.push(format!("{name} best accuracy {best:.3} (target {target})"));
    }
    Outcome::check(ok, parts.join(", "))
}

fn separability() -> Outcome {
    let mut failures = Vec::new();
    let mut parts = Vec::new();

    let mut planted = ExperimentSpec::new(DatasetRef::PlantedRoles(PlantedRoleConfig::default()));
    planted.roles.k = 4;
    let cliques = ExperimentSpec::new(DatasetRef::TwoCliques { size: 5 });
    for (name, spec) in [("planted roles", planted), ("two cliques", cliques)] {
        let start = Instant::now();
        match run(&spec) {
            Ok((_, o)) => {
                let acc = o.test_report.accuracy;
                let epochs = o.history.epochs.len();
                if acc != 1.0 {
                    failures.push(format!("{name} accuracy {acc}"));
                }
                if epochs > 300 {
                    failures.push(format!("{name} ran {epochs} epochs"));
                }
                within(start.elapsed(), 30.0, name, &mut failures);
                parts.push(format!(
                    "{name} test accuracy {acc} in {epochs} epochs ({:.1} s)",
                    start.elapsed().as_secs_f64()
                ));
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    Outcome::check(
        failures.is_empty(),
        format!("{} {}", parts.join(", "), failures.join("; ")),
    )
}

fn imbalanced() -> Outcome {
    let mut failures = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..300);
        let c = rng.random_range(2..7);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let mask = vec![true; n];
        let r = evaluate(&preds, &labels, &mask, c).unwrap();
        let (acc, per_class, macro_f1) = counting_oracle(&preds, &labels, &mask, c);
        let same_classes = r
            .per_class
            .iter()
            .zip(&per_class)
            .all(|(m, &(p, rec, f))| (m.precision, m.recall, m.f1) == (p, rec, f));
        if r.accuracy != acc || r.macro_f1 != macro_f1 || !same_classes {
            mismatches += 1;
        }
    }
    if mismatches > 0 {
        failures.push(format!("{mismatches} oracle mismatches"));
    }

    let mut spec = ExperimentSpec::new(DatasetRef::Seller(SellerConfig::default()));
    spec.model.hidden = 32;
    spec.model.heads = 2;
    spec.train.epochs = 60;
    spec.train.resample.balance = true;
    let (f1, base) = match run(&spec) {
        Ok((p, o)) => {
            let base = majority_baseline(&p.bundle.labels, &o.split.test_mask(), p.bundle.num_classes).unwrap();
            (o.test_report.macro_f1, base.macro_f1)
        }
        Err(e) => return Outcome::fail(e.to_string()),
    };
    if f1 < base + 0.15 {
        failures.push("margin below 0.15".into());
    }
    Outcome::check(
        failures.is_empty(),
        format!(
            "seller macro-F1 {f1:.3} vs majority {base:.3}, oracle agrees on {}/100 vectors {}",
            100 - mismatches,
            failures.join("; ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, Check); 8] = [
        ("1", "gradient fidelity", gradient_fidelity),
        ("2", "algebraic fixtures", algebraic_fixtures),
        ("3", "mirrored karate", mirror_karate),
        ("4", "airline ablation trend", airline_ablation),
        ("4+", "planted-role ablation trend (supplementary)", planted_ablation),
        ("5", "airline absolute targets", airline_absolute),
        ("6", "synthetic separability", separability),
        ("7", "imbalanced evaluation", imbalanced),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Outcome::fail("panicked"));
        let label = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Unverified => "UNVERIFIED",
            Status::Skipped => "SKIPPED",
        };
        if outcome.status == Status::Fail {
            failed += 1;
        }
        println!(
            "acceptance {id:<2} {label:<10} {name}: {} [{:.2} s]",
            outcome.detail.trim_end(),
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: no failures");
        ExitCode::SUCCESS
    }
}

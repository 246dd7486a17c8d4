use dpgcn::datasets::PlantedRoleConfig;
use dpgcn::experiment::{run, run_ablation, run_mirror_karate, DatasetRef, ExperimentSpec, MirrorConfig};
use dpgcn::model::Ablation;

fn planted_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(DatasetRef::PlantedRoles(PlantedRoleConfig::default()));
    spec.roles.k = 4;
    spec.model.hidden = 32;
    spec.model.heads = 2;
    spec
}

#[test]
fn rerun_gives_identical_history() {
    let mut spec = planted_spec();
    spec.train.epochs = 40;
    let (_, a) = run(&spec).unwrap();
    let (_, b) = run(&spec).unwrap();
    assert_eq!(a.history.to_csv(), b.history.to_csv());
    assert_eq!(a.test_report, b.test_report);
}

#[test]
fn removing_topology_hurts_on_planted_roles() {
    let table = run_ablation(&planted_spec(), &[0, 1], &[Ablation::Full, Ablation::NoT], 2).unwrap();
    let (_, full) = table.mean(Ablation::Full).unwrap();
    let (_, no_t) = table.mean(Ablation::NoT).unwrap();
    assert!(no_t < full, "no_t {no_t} vs full {full}");
}

#[test]
fn removing_connectivity_hurts_on_two_cliques() {
    let mut spec = ExperimentSpec::new(DatasetRef::TwoCliques { size: 5 });
    spec.model.hidden = 32;
    spec.model.heads = 2;
    let table = run_ablation(&spec, &[0, 1], &[Ablation::Full, Ablation::NoC], 2).unwrap();
    let (_, full) = table.mean(Ablation::Full).unwrap();
    let (_, no_c) = table.mean(Ablation::NoC).unwrap();
    assert!(no_c < full, "no_c {no_c} vs full {full}");
}

#[test]
fn mirror_study_reports_every_pair() {
    let r = run_mirror_karate(&MirrorConfig {
        seeds: 3,
        ..Default::default()
    })
    .unwrap();
    assert_eq!(r.per_seed.len(), 3);
    let distinct: std::collections::BTreeSet<_> = r.cluster_ids.iter().collect();
    assert!(distinct.len() <= 10);
    assert!(r.per_seed.iter().all(|s| s.no_c_max_distance == 0.0));
}

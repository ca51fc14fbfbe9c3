use std::path::Path;

use hma2b::harness::{
    aggregate, diagnostics, run_and_write, run_experiment, run_replication, write_csv, ExperimentConfig,
    GeneratorParams, InstanceSource, Phase, PolicyId, RegretTracker,
};
use hma2b::matching::enumerate_matchings;
use hma2b::{summarize, InstanceSummary, RewardMatrix};

fn write_instance(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("inst.json");
    RewardMatrix::new(vec![vec![0.5, 0.9, 0.2], vec![0.8, 0.3, 0.5]])
        .unwrap()
        .save(&path, Some(1))
        .unwrap();
    path
}

fn cfg(instance: InstanceSource, policy: PolicyId, horizon: u64, reps: u64) -> ExperimentConfig {
    ExperimentConfig {
        instance,
        policy,
        gap: (policy == PolicyId::Hdetc).then_some(0.3),
        horizon,
        replications: reps,
        base_seed: 42,
        output: None,
        trace: None,
        checkpoints: None,
    }
}

fn csv_bytes(c: &ExperimentConfig) -> Vec<u8> {
    let rows = aggregate(c, &run_experiment(c).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    buf
}

#[test]
fn csv_is_bytewise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = InstanceSource::File(write_instance(dir.path()));
    for policy in PolicyId::ALL {
        let c = cfg(inst.clone(), policy, 3000, 4);
        assert_eq!(csv_bytes(&c), csv_bytes(&c), "{policy}");
    }
}

#[test]
fn csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(InstanceSource::File(write_instance(dir.path())), PolicyId::Gphcla, 1000, 3);
    let text = String::from_utf8(csv_bytes(&c)).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "policy,M,K,gap,T,t,reps,regret_mean,regret_stderr,regret_rank,regret_exp,regret_com,\
         hints_mean,hints_stderr,comm_rounds_mean,stop_time_mean"
    );
    let ts: Vec<&str> = lines.map(|l| l.split(',').nth(5).unwrap()).collect();
    assert_eq!(ts, vec!["100", "316", "1000"]);
}

#[test]
fn single_round_regret_is_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let inst = InstanceSource::File(write_instance(dir.path()));
    for policy in PolicyId::ALL {
        let c = cfg(inst.clone(), policy, 1, 5);
        let rows = aggregate(&c, &run_experiment(&c).unwrap()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].t, 1);
        assert!(rows[0].regret_mean <= 2.0 + 1e-12, "{policy}");
    }
}

#[test]
fn parallel_matches_serial() {
    let family = InstanceSource::Family(GeneratorParams {
        num_agents: 2,
        num_arms: 3,
        gap_min: 0.1,
        gap_max: 0.5,
        seed: 3,
    });
    for policy in [PolicyId::Ghcla, PolicyId::Ebhdetc] {
        let c = cfg(family.clone(), policy, 5000, 6);
        let parallel = run_experiment(&c).unwrap();
        let serial: Vec<_> = (0..c.replications)
            .map(|i| {
                let means = c.instance.instance_for(i).unwrap();
                let summary = summarize(&means).unwrap();
                run_replication(&c, &means, &summary, i, None).unwrap()
            })
            .collect();
        assert_eq!(parallel, serial);
        assert_eq!(parallel.iter().map(|r| r.seed).collect::<Vec<_>>(), (42..48).collect::<Vec<_>>());
    }
}

#[test]
fn decomposition_holds_in_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let inst = InstanceSource::File(write_instance(dir.path()));
    for policy in PolicyId::ALL {
        let c = cfg(inst.clone(), policy, 20_000, 3);
        for row in aggregate(&c, &run_experiment(&c).unwrap()).unwrap() {
            let parts = row.regret_rank + row.regret_exp + row.regret_com;
            assert!((row.regret_mean - parts).abs() < 1e-9 * (1.0 + parts), "{policy} t={}", row.t);
        }
    }
}

#[test]
fn colliding_round_costs_the_full_optimum() {
    let means = RewardMatrix::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let summary = summarize(&means).unwrap();
    assert!((summary.optimal_utility - 1.7).abs() < 1e-12);
    let mut tr = RegretTracker::new(summary.optimal_utility, vec![1]).unwrap();
    let both_on_first = hma2b::AssignmentProfile::new(vec![0, 0], 2).unwrap();
    tr.record(Phase::Communicate, hma2b::utility(&both_on_first, &means).unwrap(), 0);
    assert!((tr.snapshots()[0].regret_com - 1.7).abs() < 1e-12);
}

#[test]
fn diagnostics_examples() {
    // U*/M = 0.85, gap/M = 0.2, delta/M = 0.05 with M = 2.
    let summary = InstanceSummary {
        optimal_matching: enumerate_matchings(2, 2).unwrap()[0].clone(),
        optimal_utility: 1.7,
        min_gap: 0.4,
    };
    let d = diagnostics(&summary, 2, 0.1).unwrap();
    assert!((d.kl_gap - 0.028_167_6).abs() < 1e-6);
    assert!(diagnostics(&summary, 2, 0.4).is_err());
    let near = diagnostics(&summary, 2, 0.2 - 1e-9).unwrap();
    assert!(near.kl_gap < 1e-12);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path());
    let cfg_path = dir.path().join("exp.json");
    std::fs::write(
        &cfg_path,
        r#"{"instance": {"file": "inst.json"}, "policy": "hdetc", "gap": 0.3,
            "horizon": 20000, "replications": 2, "base_seed": 7,
            "output": "out.csv", "trace": "trace.jsonl", "checkpoints": [1000, 20000]}"#,
    )
    .unwrap();
    let c = ExperimentConfig::load(&cfg_path).unwrap();
    let rows = run_and_write(&c).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].stop_time_mean.is_some());
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let trace = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 2 * 20_000);
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["t"], 1);
    assert_eq!(first["phase"], "rank_assign");
    assert_eq!(first["agent"], 1);

    // Tracing replication 0 must not change any result.
    let mut untraced = c.clone();
    untraced.trace = None;
    untraced.output = None;
    let again = aggregate(&untraced, &run_experiment(&untraced).unwrap()).unwrap();
    assert_eq!(rows, again);
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let inst = InstanceSource::File(write_instance(dir.path()));
    let mut c = cfg(inst, PolicyId::Hdetc, 100, 1);
    c.gap = None;
    assert!(run_experiment(&c).is_err());
    c.gap = Some(0.3);
    c.replications = 0;
    assert!(run_experiment(&c).is_err());
    let missing = cfg(InstanceSource::File(dir.path().join("nope.json")), PolicyId::Hcla, 10, 1);
    assert!(run_experiment(&missing).is_err());
}

use hma2b::central::{edge_step, CentralKind, CentralPolicy, EdgeStats};
use hma2b::harness::run_central;
use hma2b::klucb::profile_index;
use hma2b::matching::{best_other_matching, covering_matchings, hungarian, matching_value};
use hma2b::seeding::{stream_rng, ENV_STREAM, POLICY_STREAM};
use hma2b::{generate_instance, sample_round, summarize, AssignmentProfile, RewardMatrix};

fn instance_a() -> RewardMatrix {
    RewardMatrix::new(vec![vec![0.6, 0.4], vec![0.2, 0.1]]).unwrap()
}

fn converged_runs(kind: CentralKind) -> usize {
    let means = instance_a();
    let summary = summarize(&means).unwrap();
    assert_eq!(summary.optimal_matching.to_one_based(), vec![1, 2]);
    (0..50u64)
        .filter(|&seed| {
            let policy = CentralPolicy::new(kind, 2, 2).unwrap();
            let rep = run_central(&means, &summary, policy, 10_000, vec![10_000], seed, None).unwrap();
            rep.final_pull == summary.optimal_matching.to_profile()
        })
        .count()
}

#[test]
fn profile_policy_finds_the_optimum() {
    assert!(converged_runs(CentralKind::Hcla) >= 48);
}

#[test]
fn edge_policies_find_the_optimum() {
    assert!(converged_runs(CentralKind::Ghcla) >= 48);
    assert!(converged_runs(CentralKind::Gphcla) >= 48);
}

/// Drives a policy by hand so every round can be audited.
fn audit(kind: CentralKind, means: &RewardMatrix, rounds: u64, seed: u64) {
    let (m, k) = (means.num_agents(), means.num_arms());
    let mut policy = CentralPolicy::new(kind, m, k).unwrap();
    let covering = covering_matchings(m, k).unwrap();
    let members: Vec<AssignmentProfile> = covering.matchings().iter().map(|g| g.to_profile()).collect();
    let mut env = stream_rng(seed, ENV_STREAM);
    let mut prng = stream_rng(seed, POLICY_STREAM);
    let mut expected = vec![0u64; m * k];
    for t in 1..=rounds {
        let before = policy.clone();
        let d = policy.decide(t, &mut prng).unwrap();
        assert_eq!(d.hint.is_some(), d.condition_holds(), "t={t}");

        // Recompute the condition from the statistics the decision saw.
        match kind {
            CentralKind::Hcla => {
                let stats = before.profile_stats().unwrap();
                let mut best = (f64::NEG_INFINITY, usize::MAX);
                for code in 0..stats.num_profiles() {
                    let v = stats.mean(code);
                    if v > best.0 {
                        best = (v, code);
                    }
                }
                assert_eq!(stats.code(d.pull.arms()), best.1);
                let optimistic = (0..stats.num_profiles())
                    .filter(|&c| c != best.1)
                    .map(|c| profile_index(stats.mean(c) / m as f64, stats.count(c), t, m).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((optimistic - d.optimistic_value).abs() < 1e-12);
                assert_eq!(d.hint.is_some(), optimistic > best.0, "t={t}");
            }
            CentralKind::Ghcla | CentralKind::Gphcla => {
                let stats = before.edge_stats().unwrap();
                let greedy = hungarian(&stats.mean_weights());
                let idx = stats.index_weights(t);
                let chal = best_other_matching(&idx, &greedy).unwrap();
                let fire = matching_value(&idx, &chal) > matching_value(&stats.mean_weights(), &greedy);
                assert_eq!(d.pull, greedy.to_profile());
                assert_eq!(d.hint.is_some(), fire, "t={t}");
                assert!(d.pull.is_injective());
            }
        }
        if let (CentralKind::Gphcla, Some(h)) = (kind, &d.hint) {
            assert!(members.contains(h));
        }

        let out = sample_round(means, &d.pull, d.hint.as_ref(), &mut env).unwrap();
        for (a, &arm) in d.pull.arms().iter().enumerate() {
            if !out.collided[a] {
                expected[a * k + arm] += 1;
            }
        }
        if let Some(h) = &d.hint {
            for (a, &arm) in h.arms().iter().enumerate() {
                expected[a * k + arm] += 1;
            }
        }
        policy.observe(&d, &out).unwrap();
    }
    if let Some(stats) = policy.edge_stats() {
        for a in 0..m {
            for b in 0..k {
                assert_eq!(stats.count(a, b), expected[a * k + b], "edge ({a},{b})");
            }
        }
    }
}

#[test]
fn hints_follow_the_condition_and_counts_are_conserved() {
    let means = generate_instance(2, 3, 0.1, 0.5, 3).unwrap();
    for kind in [CentralKind::Hcla, CentralKind::Ghcla, CentralKind::Gphcla] {
        audit(kind, &means, 1500, 11);
    }
    let wide = generate_instance(3, 4, 0.05, 0.5, 8).unwrap();
    audit(CentralKind::Gphcla, &wide, 800, 12);
    audit(CentralKind::Ghcla, &wide, 800, 13);
}

#[test]
fn greedy_learner_on_exact_means_pulls_the_optimum() {
    let means = generate_instance(3, 4, 0.05, 0.5, 21).unwrap();
    let summary = summarize(&means).unwrap();
    let n = 1_000_000_000u64;
    let counts = vec![n; 12];
    let sums: Vec<u64> = (0..3)
        .flat_map(|a| (0..4).map(move |b| (a, b)))
        .map(|(a, b)| (means.mean(a, b) * n as f64).round() as u64)
        .collect();
    let mut stats = EdgeStats::from_parts(3, 4, counts, sums).unwrap();
    let covering = covering_matchings(3, 4).unwrap();
    let mut env = stream_rng(5, ENV_STREAM);
    let mut prng = stream_rng(5, POLICY_STREAM);
    for t in 1..=2000 {
        let d = edge_step(&stats, &covering, t, &mut prng, true, false).unwrap();
        assert!(d.hint.is_none());
        assert_eq!(d.pull, summary.optimal_matching.to_profile(), "t={t}");
        let out = sample_round(&means, &d.pull, None, &mut env).unwrap();
        hma2b::central::apply_edge_observations(&mut stats, &d, &out).unwrap();
    }
}

#[test]
fn first_round_hints_everywhere() {
    let mut rng = stream_rng(0, POLICY_STREAM);
    for kind in [CentralKind::Hcla, CentralKind::Ghcla, CentralKind::Gphcla] {
        let policy = CentralPolicy::new(kind, 2, 3).unwrap();
        let d = policy.decide(1, &mut rng).unwrap();
        assert!(d.hint.is_some(), "{kind}");
        assert_eq!(d.greedy_value, 0.0);
    }
}

#[test]
fn hint_ablation_is_edge_only() {
    assert!(CentralPolicy::new(CentralKind::Hcla, 2, 2).unwrap().without_hints().is_err());
    let p = CentralPolicy::new(CentralKind::Gphcla, 2, 2).unwrap().without_hints().unwrap();
    assert!(!p.hints_enabled());
}

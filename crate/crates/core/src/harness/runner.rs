use std::fs::File;
use std::io::BufWriter;

use rayon::prelude::*;

use super::config::{ExperimentConfig, PolicyId};
use super::metrics::{default_checkpoints, JsonlTrace, Phase, RegretTracker, Snapshot, TraceRecord, TraceSink};
use crate::central::CentralPolicy;
use crate::decentral::{run_decentralized, DecentralReport};
use crate::error::{invalid, Result};
use crate::instance::{sample_round_unchecked, summarize, utility_of_arms, AssignmentProfile, InstanceSummary, RewardMatrix};
use crate::seeding::{stream_rng, ENV_STREAM, POLICY_STREAM};

/// Outcome of one centralized replication.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralReport {
    pub snapshots: Vec<Snapshot>,
    pub final_pull: AssignmentProfile,
    pub hint_rounds: u64,
}

/// Runs a centralized learner for `horizon` rounds.
pub fn run_central(
    means: &RewardMatrix,
    summary: &InstanceSummary,
    mut policy: CentralPolicy,
    horizon: u64,
    checkpoints: Vec<u64>,
    seed: u64,
    mut trace: Option<&mut dyn TraceSink>,
) -> Result<CentralReport> {
    if horizon == 0 {
        return Err(invalid("horizon must be positive"));
    }
    let m = means.num_agents();
    let mut tracker = RegretTracker::new(summary.optimal_utility, checkpoints)?;
    let mut env = stream_rng(seed, ENV_STREAM);
    let mut prng = stream_rng(seed, POLICY_STREAM);
    let mut hint_rounds = 0;
    let mut last = None;
    for t in 1..=horizon {
        let decision = policy.decide(t, &mut prng)?;
        let out = sample_round_unchecked(
            means,
            decision.pull.arms(),
            decision.hint.as_ref().map(|h| h.arms()),
            &mut env,
        );
        policy.observe(&decision, &out)?;
        let hints = if decision.hint.is_some() { m as u64 } else { 0 };
        hint_rounds += u64::from(decision.hint.is_some());
        tracker.record(Phase::Explore, utility_of_arms(decision.pull.arms(), means), hints);
        if let Some(sink) = trace.as_deref_mut() {
            for (a, &arm) in decision.pull.arms().iter().enumerate() {
                sink.record(&TraceRecord {
                    t,
                    phase: Phase::Explore,
                    agent: a + 1,
                    arm: arm + 1,
                    collided: out.collided[a],
                    hint: decision.hint.as_ref().map(|h| h.arm(a) + 1),
                    bit: None,
                })?;
            }
        }
        last = Some(decision.pull);
    }
    Ok(CentralReport {
        snapshots: tracker.into_snapshots(),
        final_pull: last.expect("horizon is positive"),
        hint_rounds,
    })
}

/// Per-replication result.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub index: u64,
    pub seed: u64,
    pub num_agents: usize,
    pub num_arms: usize,
    pub summary: InstanceSummary,
    pub snapshots: Vec<Snapshot>,
    pub stop_time: Option<u64>,
    pub central: Option<CentralReport>,
    pub decentral: Option<DecentralReport>,
}

fn checkpoints_for(cfg: &ExperimentConfig) -> Vec<u64> {
    match &cfg.checkpoints {
        Some(cps) => {
            let mut cps = cps.clone();
            cps.sort_unstable();
            cps.dedup();
            cps
        }
        None => default_checkpoints(cfg.horizon),
    }
}

/// Runs replication `index` of an experiment.
pub fn run_replication(
    cfg: &ExperimentConfig,
    means: &RewardMatrix,
    summary: &InstanceSummary,
    index: u64,
    trace: Option<&mut dyn TraceSink>,
) -> Result<ReplicationResult> {
    let seed = cfg.base_seed.wrapping_add(index);
    let checkpoints = checkpoints_for(cfg);
    let (m, k) = (means.num_agents(), means.num_arms());
    let mut result = ReplicationResult {
        index,
        seed,
        num_agents: m,
        num_arms: k,
        summary: summary.clone(),
        snapshots: Vec::new(),
        stop_time: None,
        central: None,
        decentral: None,
    };
    if let Some(kind) = cfg.policy.decentral_kind(cfg.gap)? {
        let rep = run_decentralized(means, summary, kind, cfg.horizon, checkpoints, seed, trace)?;
        result.snapshots = rep.snapshots.clone();
        result.stop_time = rep.stop_time;
        result.decentral = Some(rep);
    } else {
        let kind = cfg.policy.central_kind().expect("policy is centralized");
        let mut policy = CentralPolicy::new(kind, m, k)?;
        if cfg.policy == PolicyId::GphclaNohint {
            policy = policy.without_hints()?;
        }
        let rep = run_central(means, summary, policy, cfg.horizon, checkpoints, seed, trace)?;
        result.snapshots = rep.snapshots.clone();
        result.central = Some(rep);
    }
    Ok(result)
}

/// Runs every replication. Results come back in replication order whatever
/// the thread schedule, so output is deterministic.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReplicationResult>> {
    cfg.validate()?;
    let shared = if cfg.instance.varies_per_replication() {
        None
    } else {
        let means = cfg.instance.instance_for(0)?;
        let summary = summarize(&means)?;
        Some((means, summary))
    };
    let one = |index: u64, trace: Option<&mut dyn TraceSink>| -> Result<ReplicationResult> {
        match &shared {
            Some((means, summary)) => run_replication(cfg, means, summary, index, trace),
            None => {
                let means = cfg.instance.instance_for(index)?;
                let summary = summarize(&means)?;
                run_replication(cfg, &means, &summary, index, trace)
            }
        }
    };
    let mut results = Vec::with_capacity(cfg.replications as usize);
    let first_parallel = match &cfg.trace {
        Some(path) => {
            let mut sink = JsonlTrace(BufWriter::new(File::create(path)?));
            results.push(one(0, Some(&mut sink))?);
            std::io::Write::flush(&mut sink.0)?;
            1
        }
        None => 0,
    };
    let rest: Vec<Result<ReplicationResult>> = (first_parallel..cfg.replications)
        .into_par_iter()
        .map(|i| one(i, None))
        .collect();
    for r in rest {
        results.push(r?);
    }
    Ok(results)
}

//! Lockstep engine for the decentralized explore-then-commit protocols.
//!
//! Each agent only sees its own pulls, hints and collision flags. Shared
//! knowledge (the quantized estimate matrix, the epoch counter, the active
//! edge set) is rebuilt by every agent from the bits it receives, and the
//! engine checks after every epoch that all copies agree.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

use super::comm::{bit_width, bits_payload, comm_rounds, decode_diff, encode_diff, payload_bits, quantize_counts};
use super::params::{hd_etc_threshold, EliminationParams};
use super::rank::run_rank_assignment;
use crate::error::{invalid, Error, Result};
use crate::harness::metrics::{Phase, RegretTracker, Snapshot, TraceRecord, TraceSink};
use crate::instance::{sample_round_unchecked, utility_of_arms, InstanceSummary, Matching, RewardMatrix};
use crate::matching::{hungarian, hungarian_with_edge, matching_value, WeightMatrix};
use crate::seeding::{stream_rng, AGENT_STREAM_BASE, ENV_STREAM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecentralKind {
    /// Explore until a threshold derived from a known gap, then commit.
    HdEtc { gap: f64 },
    /// Eliminate edges with confidence bounds until a matching remains.
    EbHdEtc,
}

impl DecentralKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::HdEtc { .. } => "hdetc",
            Self::EbHdEtc => "ebhdetc",
        }
    }

    /// Parses a policy name; `gap` is required for `hdetc`.
    pub fn parse(name: &str, gap: Option<f64>) -> Result<Self> {
        match name {
            "hdetc" => gap
                .map(|gap| Self::HdEtc { gap })
                .ok_or_else(|| invalid("hdetc needs a gap")),
            "ebhdetc" => Ok(Self::EbHdEtc),
            other => Err(invalid(format!("unknown decentralized policy {other:?}"))),
        }
    }
}

impl fmt::Display for DecentralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecentralKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, None)
    }
}

/// Timing of one epoch. Rounds are 1-based and global.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochLog {
    pub index: u64,
    pub explore_start: u64,
    pub explore_rounds: u64,
    pub comm_start: u64,
    pub comm_rounds: u64,
    pub expected_comm_rounds: u64,
    pub bit_width: u32,
    /// Active edges after the epoch (elimination protocol only).
    pub active_edges: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecentralReport {
    /// 0-based rank of each agent.
    pub ranks: Vec<usize>,
    pub agent_count: usize,
    pub rank_rounds: u64,
    pub epochs: Vec<EpochLog>,
    /// Exploration epochs whose communication phase completed.
    pub completed_epochs: u64,
    pub hints: u64,
    /// First exploitation round, if reached.
    pub stop_time: Option<u64>,
    /// Completed epochs at the moment of commitment.
    pub stop_epoch: Option<u64>,
    /// Committed matching by agent index.
    pub committed: Option<Matching>,
    pub threshold: Option<u64>,
    pub messages: u64,
    pub saturations: u64,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone)]
struct Agent {
    rank: usize,
    num_agents: usize,
    num_arms: usize,
    counts: Vec<u64>,
    sums: Vec<u64>,
    shared: Vec<f64>,
    epochs: u64,
    matching: Vec<usize>,
    active: Vec<bool>,
    committed: bool,
    phase: Phase,
    outgoing: Vec<Vec<bool>>,
    own_next: Vec<f64>,
    incoming: Vec<i64>,
    bit_buf: Vec<bool>,
}

/// One slot of the communication schedule.
#[derive(Debug, Clone, Copy)]
struct Slot {
    sender: usize,
    arm: usize,
    receiver: usize,
    bit: usize,
    last_bit: bool,
}

fn slot_at(index: u64, m: usize, k: usize, width: u32) -> Slot {
    let w = u64::from(width);
    let bit = (index % w) as usize;
    let rest = index / w;
    let r_slot = (rest % (m as u64 - 1)) as usize;
    let rest = rest / (m as u64 - 1);
    let arm = (rest % k as u64) as usize;
    let sender = (rest / k as u64) as usize;
    let receiver = if r_slot < sender { r_slot } else { r_slot + 1 };
    Slot {
        sender,
        arm,
        receiver,
        bit,
        last_bit: bit + 1 == width as usize,
    }
}

impl Agent {
    fn new(rank: usize, num_agents: usize, num_arms: usize) -> Self {
        let cells = num_agents * num_arms;
        Self {
            rank,
            num_agents,
            num_arms,
            counts: vec![0; num_arms],
            sums: vec![0; num_arms],
            shared: vec![0.0; cells],
            epochs: 0,
            matching: Vec::new(),
            active: vec![true; cells],
            committed: false,
            phase: Phase::Explore,
            outgoing: Vec::new(),
            own_next: vec![0.0; num_arms],
            incoming: vec![0; cells],
            bit_buf: Vec::new(),
        }
    }

    fn weights(&self) -> WeightMatrix {
        WeightMatrix::from_fn(self.num_agents, self.num_arms, |m, k| self.shared[m * self.num_arms + k])
            .expect("quantized estimates are finite")
    }

    fn pull_arm(&self) -> usize {
        self.matching[self.rank]
    }

    fn hint_arm(&self, t: u64) -> usize {
        (self.rank + (t % self.num_arms as u64) as usize) % self.num_arms
    }

    fn observe(&mut self, arm: usize, reward: u8) {
        self.counts[arm] += 1;
        self.sums[arm] += u64::from(reward);
    }

    /// Quantizes the own row and prepares one payload per arm. Returns the
    /// number of saturated payloads.
    fn end_exploration(&mut self) -> u64 {
        self.epochs += 1;
        let r = self.epochs;
        let width = bit_width(r);
        let mut saturated = 0;
        self.outgoing.clear();
        for k in 0..self.num_arms {
            let prev = self.shared[self.rank * self.num_arms + k];
            let next = quantize_counts(self.sums[k], self.counts[k], r);
            let payload = encode_diff(next, prev, r);
            saturated += u64::from(payload.saturated);
            self.own_next[k] = decode_diff(prev, payload.units, r);
            self.outgoing.push(payload_bits(payload.units, width));
        }
        self.phase = Phase::Communicate;
        saturated
    }

    fn comm_arm(&self, slot: Slot) -> usize {
        if self.rank == slot.sender {
            if self.outgoing[slot.arm][slot.bit] {
                self.matching[slot.receiver]
            } else {
                self.matching[self.rank]
            }
        } else {
            self.matching[self.rank]
        }
    }

    fn comm_observe(&mut self, slot: Slot, collided: bool) {
        if self.rank != slot.receiver {
            return;
        }
        self.bit_buf.push(collided);
        if slot.last_bit {
            self.incoming[slot.sender * self.num_arms + slot.arm] = bits_payload(&self.bit_buf);
            self.bit_buf.clear();
        }
    }

    fn end_comm(&mut self) {
        let r = self.epochs;
        for s in 0..self.num_agents {
            for k in 0..self.num_arms {
                let cell = s * self.num_arms + k;
                self.shared[cell] = if s == self.rank {
                    self.own_next[k]
                } else {
                    decode_diff(self.shared[cell], self.incoming[cell], r)
                };
            }
        }
    }

    /// Epoch boundary: new matching, elimination, and the commit decision.
    fn boundary(&mut self, kind: &Rules, elapsed: u64) -> Result<()> {
        let w = self.weights();
        let g = hungarian(&w);
        self.matching = g.arms().to_vec();
        let commit = match kind {
            Rules::Threshold(t0) => elapsed >= *t0,
            Rules::Elimination(params) => {
                if self.epochs == 0 {
                    false
                } else {
                    let margin = 4.0 * self.num_agents as f64 * params.epsilon(self.epochs);
                    let best = matching_value(&w, &g);
                    for m in 0..self.num_agents {
                        for k in 0..self.num_arms {
                            let cell = m * self.num_arms + k;
                            if !self.active[cell] || g.contains_edge(m, k) {
                                continue;
                            }
                            let alt = hungarian_with_edge(&w, m, k)?;
                            if best - matching_value(&w, &alt) > margin {
                                self.active[cell] = false;
                            }
                        }
                    }
                    let remaining = self.active.iter().filter(|&&a| a).count();
                    if remaining <= self.num_agents {
                        let forms_g = g.edges().all(|(m, k)| self.active[m * self.num_arms + k]);
                        if !forms_g {
                            return Err(Error::ProtocolFailure(
                                "surviving edges do not form the estimated optimal matching".into(),
                            ));
                        }
                        true
                    } else {
                        false
                    }
                }
            }
        };
        self.committed = commit;
        self.phase = if commit { Phase::Exploit } else { Phase::Explore };
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Rules {
    Threshold(u64),
    Elimination(EliminationParams),
}

fn check_agreement(agents: &[Agent]) -> Result<()> {
    let first = &agents[0];
    for other in &agents[1..] {
        let same = other.shared.iter().zip(&first.shared).all(|(a, b)| a.to_bits() == b.to_bits())
            && other.epochs == first.epochs
            && other.active == first.active
            && other.matching == first.matching
            && other.committed == first.committed
            && other.phase == first.phase;
        if !same {
            return Err(Error::ProtocolFailure(format!(
                "agents of rank {} and {} disagree after epoch {}",
                first.rank + 1,
                other.rank + 1,
                first.epochs
            )));
        }
    }
    Ok(())
}

/// Simulates one replication of a decentralized protocol.
///
/// Randomness comes from independent streams of `seed`: one for the
/// environment and one per agent.
pub fn run_decentralized(
    means: &RewardMatrix,
    summary: &InstanceSummary,
    kind: DecentralKind,
    horizon: u64,
    checkpoints: Vec<u64>,
    seed: u64,
    mut trace: Option<&mut dyn TraceSink>,
) -> Result<DecentralReport> {
    if horizon == 0 {
        return Err(invalid("horizon must be positive"));
    }
    let (m_true, k) = (means.num_agents(), means.num_arms());
    let mut tracker = RegretTracker::new(summary.optimal_utility, checkpoints)?;
    let mut env = stream_rng(seed, ENV_STREAM);
    let mut agent_rngs: Vec<ChaCha8Rng> = (0..m_true)
        .map(|i| stream_rng(seed, AGENT_STREAM_BASE + i as u64))
        .collect();

    let mut trace_err: Result<()> = Ok(());
    let rank_out = run_rank_assignment(k, &mut agent_rngs, |arms, collided| {
        let t = tracker.rounds();
        if t < horizon {
            tracker.record(Phase::RankAssign, utility_of_arms(arms, means), 0);
            if let Some(sink) = trace.as_deref_mut() {
                for (a, &arm) in arms.iter().enumerate() {
                    let rec = TraceRecord {
                        t: t + 1,
                        phase: Phase::RankAssign,
                        agent: a + 1,
                        arm: arm + 1,
                        collided: collided[a],
                        hint: None,
                        bit: None,
                    };
                    if let Err(e) = sink.record(&rec) {
                        trace_err = Err(e);
                    }
                }
            }
        }
        Ok(())
    })?;
    trace_err?;
    let m = rank_out.agent_counts[0];
    if rank_out.agent_counts.iter().any(|&c| c != m_true) {
        return Err(Error::ProtocolFailure(format!(
            "rank assignment estimated {:?} agents, expected {m_true}",
            rank_out.agent_counts
        )));
    }

    let rules = match kind {
        DecentralKind::HdEtc { gap } => Rules::Threshold(hd_etc_threshold(m, k, horizon, gap)?),
        DecentralKind::EbHdEtc => Rules::Elimination(EliminationParams::new(m, horizon)?),
    };
    let mut agents: Vec<Agent> = rank_out.ranks.iter().map(|&r| Agent::new(r, m, k)).collect();
    let mut report = DecentralReport {
        ranks: rank_out.ranks.clone(),
        agent_count: m,
        rank_rounds: rank_out.rounds,
        epochs: Vec::new(),
        completed_epochs: 0,
        hints: 0,
        stop_time: None,
        stop_epoch: None,
        committed: None,
        threshold: match rules {
            Rules::Threshold(t0) => Some(t0),
            Rules::Elimination(_) => None,
        },
        messages: 0,
        saturations: 0,
        snapshots: Vec::new(),
    };

    let mut arms = vec![0usize; m];
    let mut hints = vec![0usize; m];
    let mut collided = vec![false; m];
    let emit = |trace: &mut Option<&mut dyn TraceSink>, rec: TraceRecord| -> Result<()> {
        match trace.as_deref_mut() {
            Some(sink) => sink.record(&rec),
            None => Ok(()),
        }
    };

    let elapsed = tracker.rounds();
    for agent in agents.iter_mut() {
        agent.boundary(&rules, elapsed)?;
    }
    check_agreement(&agents)?;

    while tracker.rounds() < horizon {
        if agents[0].committed {
            for (a, agent) in agents.iter().enumerate() {
                arms[a] = agent.pull_arm();
            }
            let u = utility_of_arms(&arms, means);
            report.stop_time = Some(tracker.rounds() + 1);
            report.stop_epoch = Some(agents[0].epochs);
            report.committed = Some(Matching::new(arms.clone(), k)?);
            let remaining = horizon - tracker.rounds();
            if trace.is_none() {
                tracker.record_repeated(Phase::Exploit, u, 0, remaining);
            } else {
                for _ in 0..remaining {
                    let t = tracker.rounds() + 1;
                    for (a, &arm) in arms.iter().enumerate() {
                        emit(&mut trace, TraceRecord {
                            t,
                            phase: Phase::Exploit,
                            agent: a + 1,
                            arm: arm + 1,
                            collided: false,
                            hint: None,
                            bit: None,
                        })?;
                    }
                    tracker.record(Phase::Exploit, u, 0);
                }
            }
            break;
        }

        let mut log = EpochLog {
            index: agents[0].epochs,
            explore_start: tracker.rounds() + 1,
            explore_rounds: 0,
            comm_start: 0,
            comm_rounds: 0,
            expected_comm_rounds: comm_rounds(m, k, agents[0].epochs + 1),
            bit_width: bit_width(agents[0].epochs + 1),
            active_edges: None,
        };

        // Exploration: pull the epoch matching, hint the round-robin covering matching.
        for _ in 0..k {
            if tracker.rounds() >= horizon {
                break;
            }
            let t = tracker.rounds() + 1;
            for (a, agent) in agents.iter().enumerate() {
                arms[a] = agent.pull_arm();
                hints[a] = agent.hint_arm(t);
            }
            let out = sample_round_unchecked(means, &arms, Some(&hints), &mut env);
            let hint_rewards = out.hint_rewards.as_ref().expect("hints requested");
            for (a, agent) in agents.iter_mut().enumerate() {
                if !out.collided[a] {
                    agent.observe(arms[a], out.rewards[a]);
                }
                agent.observe(hints[a], hint_rewards[a]);
                emit(&mut trace, TraceRecord {
                    t,
                    phase: Phase::Explore,
                    agent: a + 1,
                    arm: arms[a] + 1,
                    collided: out.collided[a],
                    hint: Some(hints[a] + 1),
                    bit: None,
                })?;
            }
            tracker.record(Phase::Explore, utility_of_arms(&arms, means), m as u64);
            log.explore_rounds += 1;
        }
        if log.explore_rounds < k as u64 {
            report.epochs.push(log);
            break;
        }

        for agent in agents.iter_mut() {
            report.saturations += agent.end_exploration();
        }
        report.messages += (m * m.saturating_sub(1) * k) as u64;

        // Communication, one bit per round.
        log.comm_start = tracker.rounds() + 1;
        let width = log.bit_width;
        let mut finished = true;
        for i in 0..log.expected_comm_rounds {
            if tracker.rounds() >= horizon {
                finished = false;
                break;
            }
            let t = tracker.rounds() + 1;
            let slot = slot_at(i, m, k, width);
            for (a, agent) in agents.iter().enumerate() {
                arms[a] = agent.comm_arm(slot);
            }
            for a in 0..m {
                collided[a] = arms.iter().enumerate().any(|(o, &x)| o != a && x == arms[a]);
            }
            for (a, agent) in agents.iter_mut().enumerate() {
                agent.comm_observe(slot, collided[a]);
                let bit = (agent.rank == slot.receiver).then_some(u8::from(collided[a]));
                emit(&mut trace, TraceRecord {
                    t,
                    phase: Phase::Communicate,
                    agent: a + 1,
                    arm: arms[a] + 1,
                    collided: collided[a],
                    hint: None,
                    bit,
                })?;
            }
            tracker.record(Phase::Communicate, utility_of_arms(&arms, means), 0);
            log.comm_rounds += 1;
        }
        if !finished {
            report.epochs.push(log);
            break;
        }

        let elapsed = tracker.rounds();
        for agent in agents.iter_mut() {
            agent.end_comm();
            agent.boundary(&rules, elapsed)?;
        }
        check_agreement(&agents)?;
        report.completed_epochs = agents[0].epochs;
        if matches!(rules, Rules::Elimination(_)) {
            log.active_edges = Some(agents[0].active.iter().filter(|&&x| x).count());
        }
        report.epochs.push(log);
    }

    report.hints = tracker.current().hints;
    report.snapshots = tracker.into_snapshots();
    Ok(report)
}

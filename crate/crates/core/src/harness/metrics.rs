//! Phase-labelled pseudo-regret accounting and round traces.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::instance::InstanceSummary;
use crate::klucb::kl_bernoulli;

/// Label attached to every simulated round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    RankAssign,
    Explore,
    Communicate,
    Exploit,
}

/// Cumulative metrics at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Snapshot {
    pub t: u64,
    pub regret_rank: f64,
    /// Exploration and exploitation rounds (and every centralized round).
    pub regret_exp: f64,
    pub regret_com: f64,
    pub hints: u64,
    pub comm_rounds: u64,
}

impl Snapshot {
    pub fn regret(&self) -> f64 {
        self.regret_rank + self.regret_exp + self.regret_com
    }
}

/// `round(10^(2 + i/2))` for every such value below `horizon`, then `horizon`.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..)
        .map(|i| 10f64.powf(2.0 + 0.5 * f64::from(i)).round() as u64)
        .take_while(|&c| c < horizon)
        .collect();
    out.push(horizon);
    out
}

/// Accumulates per-round regret `U* - U(profile)` into phase bins and
/// snapshots it at checkpoints.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    optimal: f64,
    checkpoints: Vec<u64>,
    next: usize,
    current: Snapshot,
    snapshots: Vec<Snapshot>,
}

impl RegretTracker {
    /// `checkpoints` must be strictly increasing and positive.
    pub fn new(optimal_utility: f64, checkpoints: Vec<u64>) -> Result<Self> {
        if checkpoints.first() == Some(&0) || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("checkpoints must be positive and strictly increasing"));
        }
        Ok(Self {
            optimal: optimal_utility,
            checkpoints,
            next: 0,
            current: Snapshot::default(),
            snapshots: Vec::new(),
        })
    }

    /// Rounds recorded so far.
    pub fn rounds(&self) -> u64 {
        self.current.t
    }

    pub fn current(&self) -> &Snapshot {
        &self.current
    }

    pub fn record(&mut self, phase: Phase, utility: f64, hints: u64) {
        self.record_repeated(phase, utility, hints, 1);
    }

    /// Records `rounds` identical rounds.
    pub fn record_repeated(&mut self, phase: Phase, utility: f64, hints: u64, mut rounds: u64) {
        let regret = self.optimal - utility;
        while rounds > 0 {
            let step = match self.checkpoints.get(self.next) {
                Some(&cp) => rounds.min(cp - self.current.t),
                None => rounds,
            };
            let amount = regret * step as f64;
            match phase {
                Phase::RankAssign => self.current.regret_rank += amount,
                Phase::Explore | Phase::Exploit => self.current.regret_exp += amount,
                Phase::Communicate => {
                    self.current.regret_com += amount;
                    self.current.comm_rounds += step;
                }
            }
            self.current.hints += hints * step;
            self.current.t += step;
            rounds -= step;
            if self.checkpoints.get(self.next) == Some(&self.current.t) {
                self.current.t = self.checkpoints[self.next];
                self.snapshots.push(self.current);
                self.next += 1;
            }
        }
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<Snapshot> {
        self.snapshots
    }
}

/// One agent's action in one round. Agents and arms are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub t: u64,
    pub phase: Phase,
    pub agent: usize,
    pub arm: usize,
    pub collided: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit: Option<u8>,
}

pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()>;
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

/// Writes one JSON object per line.
pub struct JsonlTrace<W: Write>(pub W);

impl<W: Write> TraceSink for JsonlTrace<W> {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        serde_json::to_writer(&mut self.0, rec)?;
        self.0.write_all(b"\n")?;
        Ok(())
    }
}

/// Instance constants that set the scale of the hint bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub min_gap: f64,
    pub kl_gap: f64,
}

/// `kl((U* - gap + delta)/M, (U* - delta)/M)` for `0 < delta < gap / 2`.
pub fn diagnostics(summary: &InstanceSummary, num_agents: usize, delta: f64) -> Result<Diagnostics> {
    let gap = summary.min_gap;
    if !(delta > 0.0 && delta < gap / 2.0) {
        return Err(invalid(format!("delta must lie in (0, {}), got {delta}", gap / 2.0)));
    }
    let m = num_agents as f64;
    let u = summary.optimal_utility;
    let p = ((u - gap + delta) / m).clamp(0.0, 1.0);
    let q = ((u - delta) / m).clamp(0.0, 1.0);
    Ok(Diagnostics {
        min_gap: gap,
        kl_gap: kl_bernoulli(p, q)?,
    })
}

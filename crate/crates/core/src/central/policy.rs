use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::stats::{EdgeStats, ProfileStats};
use crate::error::{invalid, Error, Result};
use crate::instance::{shares_arm, AssignmentProfile, Matching, RoundOutcome, DEFAULT_ENUMERATION_CAP};
use crate::klucb::{exploration_rate, index_unchecked};
use crate::matching::{best_other_matching, count_profiles, covering_matchings, hungarian, matching_value, CoveringSet};

/// What a centralized policy does in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub pull: AssignmentProfile,
    /// Present iff the hint condition fired.
    pub hint: Option<AssignmentProfile>,
    /// The optimistic challenger the condition was evaluated on.
    pub challenger: Option<AssignmentProfile>,
    /// Left side of the hint condition: the challenger's optimistic value.
    pub optimistic_value: f64,
    /// Right side: the empirical value of the pulled profile.
    pub greedy_value: f64,
}

impl PolicyDecision {
    /// The hint condition, recomputed from the recorded values.
    pub fn condition_holds(&self) -> bool {
        self.challenger.is_some() && self.optimistic_value > self.greedy_value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CentralKind {
    /// Optimism over whole assignment profiles.
    Hcla,
    /// Edge-level optimism; hints are the challenger itself or a random covering matching.
    Ghcla,
    /// Edge-level optimism projected onto the covering set.
    Gphcla,
}

impl CentralKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Hcla => "hcla",
            Self::Ghcla => "ghcla",
            Self::Gphcla => "gphcla",
        }
    }
}

impl fmt::Display for CentralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CentralKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hcla" => Ok(Self::Hcla),
            "ghcla" => Ok(Self::Ghcla),
            "gphcla" => Ok(Self::Gphcla),
            other => Err(invalid(format!("unknown centralized policy {other:?}"))),
        }
    }
}

/// Picks between the two hint candidates: one coin, then one uniform index,
/// always both, in that order.
fn hint_coin<R: Rng + ?Sized>(pool: usize, rng: &mut R) -> (bool, usize) {
    let first = rng.gen_bool(0.5);
    let pick = rng.gen_range(0..pool);
    (first, pick)
}

/// One round of the profile-level policy.
pub fn hcla_step<R: Rng + ?Sized>(stats: &ProfileStats, t: u64, rng: &mut R) -> Result<PolicyDecision> {
    if t == 0 {
        return Err(invalid("rounds are numbered from 1"));
    }
    let n = stats.num_profiles();
    let m_count = stats.num_agents();
    // First maximum in code order is the lexicographic tie-break.
    let mut greedy = 0;
    for c in 1..n {
        if stats.mean(c) > stats.mean(greedy) {
            greedy = c;
        }
    }
    let rate = exploration_rate(t);
    let index = |c: usize| m_count as f64 * index_unchecked(stats.mean(c) / m_count as f64, stats.count(c), rate);
    let mut challenger: Option<(usize, f64)> = None;
    for c in (0..n).filter(|&c| c != greedy) {
        let d = index(c);
        if challenger.is_none_or(|(_, best)| d > best) {
            challenger = Some((c, d));
        }
    }
    let greedy_value = stats.mean(greedy);
    let pull = AssignmentProfile::from_vec_unchecked(stats.decode(greedy));
    let Some((chal, optimistic_value)) = challenger else {
        return Ok(PolicyDecision {
            pull,
            hint: None,
            challenger: None,
            optimistic_value: f64::NEG_INFINITY,
            greedy_value,
        });
    };
    let hint = (optimistic_value > greedy_value).then(|| {
        let (first, pick) = hint_coin(n, rng);
        let code = if first { chal } else { pick };
        AssignmentProfile::from_vec_unchecked(stats.decode(code))
    });
    Ok(PolicyDecision {
        pull,
        hint,
        challenger: Some(AssignmentProfile::from_vec_unchecked(stats.decode(chal))),
        optimistic_value,
        greedy_value,
    })
}

/// One round of an edge-level policy.
///
/// `project` selects the covering-set projection; `hints` off turns the
/// policy into a pure greedy learner (used as an ablation).
pub fn edge_step<R: Rng + ?Sized>(
    stats: &EdgeStats,
    covering: &CoveringSet,
    t: u64,
    rng: &mut R,
    project: bool,
    hints: bool,
) -> Result<PolicyDecision> {
    if t == 0 {
        return Err(invalid("rounds are numbered from 1"));
    }
    let means = stats.mean_weights();
    let greedy = hungarian(&means);
    let greedy_value = matching_value(&means, &greedy);
    let indices = stats.index_weights(t);
    let challenger = best_other_matching(&indices, &greedy);
    let optimistic_value = challenger
        .as_ref()
        .map_or(f64::NEG_INFINITY, |g| matching_value(&indices, g));
    let fire = hints && challenger.is_some() && optimistic_value > greedy_value;
    let hint = match (&challenger, fire) {
        (Some(chal), true) => {
            let (first, pick) = hint_coin(covering.len(), rng);
            Some(if !first {
                covering.get(pick).to_profile()
            } else if project {
                covering.get(projection_index(stats, covering, chal)).to_profile()
            } else {
                chal.to_profile()
            })
        }
        _ => None,
    };
    Ok(PolicyDecision {
        pull: greedy.to_profile(),
        hint,
        challenger: challenger.map(|g| g.to_profile()),
        optimistic_value,
        greedy_value,
    })
}

/// Covering member containing the least-observed edge of `challenger`; ties
/// go to the smallest agent.
pub fn projection_index(stats: &EdgeStats, covering: &CoveringSet, challenger: &Matching) -> usize {
    let (m, k) = challenger
        .edges()
        .min_by_key(|&(m, k)| stats.count(m, k))
        .expect("matchings are non-empty");
    covering.index_containing(m, k)
}

pub fn ghcla_step<R: Rng + ?Sized>(
    stats: &EdgeStats,
    covering: &CoveringSet,
    t: u64,
    rng: &mut R,
) -> Result<PolicyDecision> {
    edge_step(stats, covering, t, rng, false, true)
}

pub fn gphcla_step<R: Rng + ?Sized>(
    stats: &EdgeStats,
    covering: &CoveringSet,
    t: u64,
    rng: &mut R,
) -> Result<PolicyDecision> {
    edge_step(stats, covering, t, rng, true, true)
}

fn check_outcome(decision: &PolicyDecision, outcome: &RoundOutcome, num_agents: usize) -> Result<()> {
    let len_ok = decision.pull.len() == num_agents
        && outcome.rewards.len() == num_agents
        && outcome.collided.len() == num_agents;
    let hint_ok = match (&decision.hint, &outcome.hint_rewards) {
        (None, None) => true,
        (Some(h), Some(r)) => h.len() == num_agents && r.len() == num_agents,
        _ => false,
    };
    if len_ok && hint_ok {
        Ok(())
    } else {
        Err(invalid("outcome does not match the decision"))
    }
}

/// Pulled edges count only without a collision; hinted edges always count.
pub fn apply_edge_observations(stats: &mut EdgeStats, decision: &PolicyDecision, outcome: &RoundOutcome) -> Result<()> {
    check_outcome(decision, outcome, stats.num_agents())?;
    for (m, &k) in decision.pull.arms().iter().enumerate() {
        if !outcome.collided[m] {
            stats.record(m, k, outcome.rewards[m]);
        }
    }
    if let (Some(hint), Some(rewards)) = (&decision.hint, &outcome.hint_rewards) {
        for (m, &k) in hint.arms().iter().enumerate() {
            stats.record(m, k, rewards[m]);
        }
    }
    Ok(())
}

/// The pulled profile gains its realized utility. The hinted profile gains the
/// utility its hint draws would have produced, so agents that would share an
/// arm contribute nothing.
pub fn apply_profile_observations(
    stats: &mut ProfileStats,
    decision: &PolicyDecision,
    outcome: &RoundOutcome,
) -> Result<()> {
    check_outcome(decision, outcome, stats.num_agents())?;
    let realized = outcome.rewards.iter().map(|&r| u64::from(r)).sum();
    stats.record(stats.code(decision.pull.arms()), realized);
    if let (Some(hint), Some(rewards)) = (&decision.hint, &outcome.hint_rewards) {
        let arms = hint.arms();
        let utility = arms
            .iter()
            .enumerate()
            .filter(|&(m, &k)| !shares_arm(arms, m, k))
            .map(|(m, _)| u64::from(rewards[m]))
            .sum();
        stats.record(stats.code(arms), utility);
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum State {
    Profiles(ProfileStats),
    Edges { stats: EdgeStats, covering: CoveringSet },
}

/// A centralized learner with its statistics.
#[derive(Debug, Clone)]
pub struct CentralPolicy {
    kind: CentralKind,
    hints_enabled: bool,
    state: State,
}

impl CentralPolicy {
    pub fn new(kind: CentralKind, num_agents: usize, num_arms: usize) -> Result<Self> {
        if num_agents == 0 || num_agents > num_arms {
            return Err(invalid(format!("need 1 <= M <= K, got M={num_agents}, K={num_arms}")));
        }
        let state = match kind {
            CentralKind::Hcla => {
                let count = count_profiles(num_agents, num_arms);
                match count {
                    Some(c) if c <= DEFAULT_ENUMERATION_CAP => {
                        State::Profiles(ProfileStats::new(num_agents, num_arms, c as usize))
                    }
                    _ => {
                        return Err(Error::TooLarge {
                            count: count.unwrap_or(u128::MAX),
                            cap: DEFAULT_ENUMERATION_CAP,
                        })
                    }
                }
            }
            CentralKind::Ghcla | CentralKind::Gphcla => State::Edges {
                stats: EdgeStats::new(num_agents, num_arms),
                covering: covering_matchings(num_agents, num_arms)?,
            },
        };
        Ok(Self {
            kind,
            hints_enabled: true,
            state,
        })
    }

    /// Disables hints entirely (edge-level policies only).
    pub fn without_hints(mut self) -> Result<Self> {
        if matches!(self.state, State::Profiles(_)) {
            return Err(invalid("hint ablation is only defined for edge-level policies"));
        }
        self.hints_enabled = false;
        Ok(self)
    }

    pub fn kind(&self) -> CentralKind {
        self.kind
    }

    pub fn hints_enabled(&self) -> bool {
        self.hints_enabled
    }

    pub fn edge_stats(&self) -> Option<&EdgeStats> {
        match &self.state {
            State::Edges { stats, .. } => Some(stats),
            State::Profiles(_) => None,
        }
    }

    pub fn profile_stats(&self) -> Option<&ProfileStats> {
        match &self.state {
            State::Profiles(stats) => Some(stats),
            State::Edges { .. } => None,
        }
    }

    pub fn decide<R: Rng + ?Sized>(&self, t: u64, rng: &mut R) -> Result<PolicyDecision> {
        match &self.state {
            State::Profiles(stats) => hcla_step(stats, t, rng),
            State::Edges { stats, covering } => edge_step(
                stats,
                covering,
                t,
                rng,
                self.kind == CentralKind::Gphcla,
                self.hints_enabled,
            ),
        }
    }

    pub fn observe(&mut self, decision: &PolicyDecision, outcome: &RoundOutcome) -> Result<()> {
        match &mut self.state {
            State::Profiles(stats) => apply_profile_observations(stats, decision, outcome),
            State::Edges { stats, .. } => apply_edge_observations(stats, decision, outcome),
        }
    }
}

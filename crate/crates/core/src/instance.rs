//! The bandit environment: reward matrices, action profiles, collision-aware
//! reward sampling and brute-force instance summaries.
//!
//! Agents and arms are 0-based inside the crate. Anything printed or written
//! for people (traces, `Display`) is 1-based.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matching::ProfileIter;

/// Default cap on the number of profiles an exhaustive search may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Default number of rejection-sampling attempts in [`generate_instance`].
pub const DEFAULT_GENERATION_ATTEMPTS: usize = 100_000;

/// Utilities closer than this are treated as equal when checking uniqueness.
const UTILITY_TIE_TOL: f64 = 1e-12;

/// The `M x K` matrix of Bernoulli means.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMatrix {
    num_agents: usize,
    num_arms: usize,
    means: Vec<f64>,
}

impl RewardMatrix {
    /// Builds a matrix from agent-major rows.
    ///
    /// Requires at least one agent, no more agents than arms, equal row
    /// lengths and every entry in `[0, 1]`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_agents = rows.len();
        if num_agents == 0 {
            return Err(invalid("reward matrix needs at least one agent"));
        }
        let num_arms = rows[0].len();
        if rows.iter().any(|r| r.len() != num_arms) {
            return Err(invalid("reward matrix rows have unequal lengths"));
        }
        if num_agents > num_arms {
            return Err(invalid(format!(
                "need M <= K, got M={num_agents}, K={num_arms}"
            )));
        }
        let means: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(bad) = means.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("mean {bad} outside [0, 1]")));
        }
        Ok(Self {
            num_agents,
            num_arms,
            means,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    #[inline]
    pub fn mean(&self, agent: usize, arm: usize) -> f64 {
        self.means[agent * self.num_arms + arm]
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        &self.means[agent * self.num_arms..(agent + 1) * self.num_arms]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_agents).map(|m| self.row(m).to_vec()).collect()
    }

    /// Loads an instance file (`{"M", "K", "means", "seed"}`).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: InstanceFile = serde_json::from_str(&text)?;
        file.into_matrix()
    }

    pub fn save(&self, path: impl AsRef<Path>, seed: Option<u64>) -> Result<()> {
        let file = InstanceFile::from_matrix(self, seed);
        std::fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
        Ok(())
    }
}

/// On-disk instance description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "M")]
    pub num_agents: usize,
    #[serde(rename = "K")]
    pub num_arms: usize,
    pub means: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn from_matrix(matrix: &RewardMatrix, seed: Option<u64>) -> Self {
        Self {
            num_agents: matrix.num_agents(),
            num_arms: matrix.num_arms(),
            means: matrix.rows(),
            seed,
        }
    }

    pub fn into_matrix(self) -> Result<RewardMatrix> {
        if self.means.len() != self.num_agents
            || self.means.iter().any(|r| r.len() != self.num_arms)
        {
            return Err(invalid(format!(
                "instance declares M={}, K={} but means has a different shape",
                self.num_agents, self.num_arms
            )));
        }
        RewardMatrix::new(self.means)
    }
}

fn check_arms(arms: &[usize], num_arms: usize) -> Result<()> {
    if let Some(bad) = arms.iter().find(|&&k| k >= num_arms) {
        return Err(invalid(format!(
            "arm index {} out of range 1..={num_arms}",
            bad + 1
        )));
    }
    Ok(())
}

fn is_injective(arms: &[usize]) -> bool {
    arms.iter()
        .enumerate()
        .all(|(i, a)| !arms[..i].contains(a))
}

fn write_one_based(f: &mut fmt::Formatter<'_>, arms: &[usize]) -> fmt::Result {
    write!(f, "(")?;
    for (i, k) in arms.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{}", k + 1)?;
    }
    write!(f, ")")
}

/// One arm per agent. Arms may repeat, in which case the agents collide.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AssignmentProfile {
    arm_of: Vec<usize>,
}

impl AssignmentProfile {
    pub fn new(arm_of: Vec<usize>, num_arms: usize) -> Result<Self> {
        check_arms(&arm_of, num_arms)?;
        Ok(Self { arm_of })
    }

    /// Builds a profile from 1-based arm labels.
    pub fn from_one_based(labels: &[usize], num_arms: usize) -> Result<Self> {
        if labels.contains(&0) {
            return Err(invalid("arm labels are 1-based"));
        }
        Self::new(labels.iter().map(|k| k - 1).collect(), num_arms)
    }

    pub(crate) fn from_vec_unchecked(arm_of: Vec<usize>) -> Self {
        Self { arm_of }
    }

    pub fn arms(&self) -> &[usize] {
        &self.arm_of
    }

    pub fn arm(&self, agent: usize) -> usize {
        self.arm_of[agent]
    }

    pub fn len(&self) -> usize {
        self.arm_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arm_of.is_empty()
    }

    pub fn is_injective(&self) -> bool {
        is_injective(&self.arm_of)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.arm_of.iter().map(|k| k + 1).collect()
    }
}

impl fmt::Display for AssignmentProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_one_based(f, &self.arm_of)
    }
}

/// A collision-free profile: no two agents share an arm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    arm_of: Vec<usize>,
}

impl Matching {
    pub fn new(arm_of: Vec<usize>, num_arms: usize) -> Result<Self> {
        check_arms(&arm_of, num_arms)?;
        if !is_injective(&arm_of) {
            return Err(invalid("matching assigns one arm to several agents"));
        }
        Ok(Self { arm_of })
    }

    pub fn from_one_based(labels: &[usize], num_arms: usize) -> Result<Self> {
        if labels.contains(&0) {
            return Err(invalid("arm labels are 1-based"));
        }
        Self::new(labels.iter().map(|k| k - 1).collect(), num_arms)
    }

    pub(crate) fn from_vec_unchecked(arm_of: Vec<usize>) -> Self {
        debug_assert!(is_injective(&arm_of));
        Self { arm_of }
    }

    pub fn arms(&self) -> &[usize] {
        &self.arm_of
    }

    pub fn arm(&self, agent: usize) -> usize {
        self.arm_of[agent]
    }

    pub fn len(&self) -> usize {
        self.arm_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arm_of.is_empty()
    }

    pub fn contains_edge(&self, agent: usize, arm: usize) -> bool {
        self.arm_of.get(agent) == Some(&arm)
    }

    /// `(agent, arm)` pairs in agent order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arm_of.iter().copied().enumerate()
    }

    pub fn to_profile(&self) -> AssignmentProfile {
        AssignmentProfile {
            arm_of: self.arm_of.clone(),
        }
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.arm_of.iter().map(|k| k + 1).collect()
    }
}

impl TryFrom<AssignmentProfile> for Matching {
    type Error = Error;

    fn try_from(profile: AssignmentProfile) -> Result<Self> {
        if !profile.is_injective() {
            return Err(invalid("profile has collisions"));
        }
        Ok(Self {
            arm_of: profile.arm_of,
        })
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_one_based(f, &self.arm_of)
    }
}

/// Expected utility of a profile: sum of means over agents whose arm is not shared.
pub fn utility(profile: &AssignmentProfile, means: &RewardMatrix) -> Result<f64> {
    if profile.len() != means.num_agents() {
        return Err(invalid(format!(
            "profile has {} agents, instance has {}",
            profile.len(),
            means.num_agents()
        )));
    }
    check_arms(profile.arms(), means.num_arms())?;
    Ok(utility_of_arms(profile.arms(), means))
}

/// Utility of a raw arm vector whose shape is already known to be valid.
pub(crate) fn utility_of_arms(arms: &[usize], means: &RewardMatrix) -> f64 {
    arms.iter()
        .enumerate()
        .filter(|&(m, k)| !shares_arm(arms, m, *k))
        .map(|(m, &k)| means.mean(m, k))
        .sum()
}

#[inline]
pub(crate) fn shares_arm(arms: &[usize], agent: usize, arm: usize) -> bool {
    arms.iter()
        .enumerate()
        .any(|(other, &k)| other != agent && k == arm)
}

/// What every agent observes after one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutcome {
    pub rewards: Vec<u8>,
    pub collided: Vec<bool>,
    /// Present iff the round carried a hint profile.
    pub hint_rewards: Option<Vec<u8>>,
}

/// Plays one round.
///
/// Non-colliding agents draw Bernoulli rewards in agent order, then every
/// hinting agent draws its hint in agent order. Hints never collide.
pub fn sample_round<R: Rng + ?Sized>(
    means: &RewardMatrix,
    profile: &AssignmentProfile,
    hints: Option<&AssignmentProfile>,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let m_count = means.num_agents();
    if profile.len() != m_count || hints.is_some_and(|h| h.len() != m_count) {
        return Err(invalid("profile length does not match the number of agents"));
    }
    check_arms(profile.arms(), means.num_arms())?;
    if let Some(h) = hints {
        check_arms(h.arms(), means.num_arms())?;
    }
    Ok(sample_round_unchecked(means, profile.arms(), hints.map(|h| h.arms()), rng))
}

pub(crate) fn sample_round_unchecked<R: Rng + ?Sized>(
    means: &RewardMatrix,
    arms: &[usize],
    hints: Option<&[usize]>,
    rng: &mut R,
) -> RoundOutcome {
    let mut rewards = vec![0u8; arms.len()];
    let mut collided = vec![false; arms.len()];
    for (m, &k) in arms.iter().enumerate() {
        if shares_arm(arms, m, k) {
            collided[m] = true;
        } else {
            rewards[m] = bernoulli(means.mean(m, k), rng);
        }
    }
    let hint_rewards = hints.map(|h| {
        h.iter()
            .enumerate()
            .map(|(m, &k)| bernoulli(means.mean(m, k), rng))
            .collect()
    });
    RoundOutcome {
        rewards,
        collided,
        hint_rewards,
    }
}

#[inline]
pub(crate) fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u8 {
    u8::from(rng.gen::<f64>() < p)
}

/// Ground-truth optimum of an instance, found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSummary {
    pub optimal_matching: Matching,
    pub optimal_utility: f64,
    /// Utility gap between the optimum and the best other profile.
    pub min_gap: f64,
}

/// Enumerates all `K^M` profiles (collisions included) and reports the
/// optimum and the gap to the runner-up.
pub fn summarize(means: &RewardMatrix) -> Result<InstanceSummary> {
    summarize_with_cap(means, DEFAULT_ENUMERATION_CAP)
}

pub fn summarize_with_cap(means: &RewardMatrix, cap: u128) -> Result<InstanceSummary> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut second = f64::NEG_INFINITY;
    let mut iter = ProfileIter::new(means.num_agents(), means.num_arms(), cap)?;
    while let Some(arms) = iter.next_profile() {
        let u = utility_of_arms(arms, means);
        match &mut best {
            Some((best_arms, best_u)) if u > *best_u => {
                second = *best_u;
                best_arms.copy_from_slice(arms);
                *best_u = u;
            }
            Some(_) => second = second.max(u),
            None => best = Some((arms.to_vec(), u)),
        }
    }
    let (arms, optimal_utility) = best.expect("at least one profile exists");
    // A single profile only happens for M = K = 1; the gap is then the full utility.
    let runner_up = if second.is_finite() { second } else { 0.0 };
    let min_gap = optimal_utility - runner_up;
    if min_gap <= UTILITY_TIE_TOL {
        return Err(Error::DegenerateInstance(format!(
            "optimal profile is not unique (gap {min_gap:.3e})"
        )));
    }
    let optimal_matching = Matching::try_from(AssignmentProfile::from_vec_unchecked(arms))
        .map_err(|_| Error::DegenerateInstance("optimum has a collision".into()))?;
    Ok(InstanceSummary {
        optimal_matching,
        optimal_utility,
        min_gap,
    })
}

/// Rejection-samples a uniform `M x K` instance whose minimum gap lies in
/// `[gap_min, gap_max]`. Deterministic per seed.
pub fn generate_instance(
    num_agents: usize,
    num_arms: usize,
    gap_min: f64,
    gap_max: f64,
    seed: u64,
) -> Result<RewardMatrix> {
    generate_instance_with_budget(
        num_agents,
        num_arms,
        gap_min,
        gap_max,
        seed,
        DEFAULT_GENERATION_ATTEMPTS,
    )
}

pub fn generate_instance_with_budget(
    num_agents: usize,
    num_arms: usize,
    gap_min: f64,
    gap_max: f64,
    seed: u64,
    attempts: usize,
) -> Result<RewardMatrix> {
    if !(gap_min >= 0.0 && gap_max > 0.0 && gap_min <= gap_max) {
        return Err(invalid(format!(
            "need 0 <= gap_min <= gap_max and gap_max > 0, got [{gap_min}, {gap_max}]"
        )));
    }
    if num_agents == 0 || num_agents > num_arms {
        return Err(invalid(format!(
            "need 1 <= M <= K, got M={num_agents}, K={num_arms}"
        )));
    }
    let profiles = (num_arms as u128).checked_pow(num_agents as u32);
    if profiles.is_none_or(|p| p > DEFAULT_ENUMERATION_CAP) {
        return Err(Error::TooLarge {
            count: profiles.unwrap_or(u128::MAX),
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let rows = (0..num_agents)
            .map(|_| (0..num_arms).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let matrix = RewardMatrix::new(rows)?;
        match summarize(&matrix) {
            Ok(s) if s.min_gap >= gap_min && s.min_gap <= gap_max => return Ok(matrix),
            _ => continue,
        }
    }
    Err(Error::GenerationFailure { attempts })
}

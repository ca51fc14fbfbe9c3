use crate::error::{invalid, Result};
use crate::instance::Matching;

/// `K` pairwise edge-disjoint matchings covering every agent-arm pair.
///
/// Matching `i` (0-based) sends agent `m` to arm `(m + i) mod K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringSet {
    num_arms: usize,
    matchings: Vec<Matching>,
}

impl CoveringSet {
    pub fn matchings(&self) -> &[Matching] {
        &self.matchings
    }

    pub fn get(&self, index: usize) -> &Matching {
        &self.matchings[index]
    }

    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    /// Index of the unique member containing edge `(agent, arm)`.
    pub fn index_containing(&self, agent: usize, arm: usize) -> usize {
        (arm + self.num_arms - agent % self.num_arms) % self.num_arms
    }
}

pub fn covering_matchings(num_agents: usize, num_arms: usize) -> Result<CoveringSet> {
    if num_agents == 0 || num_agents > num_arms {
        return Err(invalid(format!(
            "need 1 <= M <= K, got M={num_agents}, K={num_arms}"
        )));
    }
    let matchings = (0..num_arms)
        .map(|i| Matching::from_vec_unchecked((0..num_agents).map(|m| (m + i) % num_arms).collect()))
        .collect();
    Ok(CoveringSet {
        num_arms,
        matchings,
    })
}

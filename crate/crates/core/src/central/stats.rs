use crate::error::{invalid, Result};
use crate::klucb::{exploration_rate, index_unchecked};
use crate::matching::WeightMatrix;

/// Per-edge observation counts and success totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeStats {
    num_agents: usize,
    num_arms: usize,
    counts: Vec<u64>,
    sums: Vec<u64>,
}

impl EdgeStats {
    pub fn new(num_agents: usize, num_arms: usize) -> Self {
        Self {
            num_agents,
            num_arms,
            counts: vec![0; num_agents * num_arms],
            sums: vec![0; num_agents * num_arms],
        }
    }

    /// Builds stats from agent-major `counts` and `sums`.
    pub fn from_parts(num_agents: usize, num_arms: usize, counts: Vec<u64>, sums: Vec<u64>) -> Result<Self> {
        let cells = num_agents * num_arms;
        if counts.len() != cells || sums.len() != cells {
            return Err(invalid("edge stats have the wrong number of cells"));
        }
        if counts.iter().zip(&sums).any(|(c, s)| s > c) {
            return Err(invalid("edge sums exceed counts"));
        }
        Ok(Self {
            num_agents,
            num_arms,
            counts,
            sums,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    #[inline]
    pub fn count(&self, agent: usize, arm: usize) -> u64 {
        self.counts[agent * self.num_arms + arm]
    }

    #[inline]
    pub fn sum(&self, agent: usize, arm: usize) -> u64 {
        self.sums[agent * self.num_arms + arm]
    }

    /// Empirical mean, 0 for an unobserved edge.
    pub fn mean(&self, agent: usize, arm: usize) -> f64 {
        match self.count(agent, arm) {
            0 => 0.0,
            n => self.sum(agent, arm) as f64 / n as f64,
        }
    }

    pub fn record(&mut self, agent: usize, arm: usize, reward: u8) {
        let cell = agent * self.num_arms + arm;
        self.counts[cell] += 1;
        self.sums[cell] += u64::from(reward);
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean_weights(&self) -> WeightMatrix {
        WeightMatrix::from_fn(self.num_agents, self.num_arms, |m, k| self.mean(m, k))
            .expect("means are finite")
    }

    /// kl-UCB index of every edge at round `t`.
    pub fn index_weights(&self, t: u64) -> WeightMatrix {
        let rate = exploration_rate(t);
        WeightMatrix::from_fn(self.num_agents, self.num_arms, |m, k| {
            index_unchecked(self.mean(m, k), self.count(m, k), rate)
        })
        .expect("indices are finite")
    }
}

/// Per-profile counts and realized-utility totals over all `K^M` profiles.
///
/// Profiles are keyed by their mixed-radix code, so the lexicographic order of
/// arm vectors is the numeric order of codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileStats {
    num_agents: usize,
    num_arms: usize,
    counts: Vec<u64>,
    sums: Vec<u64>,
}

impl ProfileStats {
    pub fn new(num_agents: usize, num_arms: usize, profiles: usize) -> Self {
        Self {
            num_agents,
            num_arms,
            counts: vec![0; profiles],
            sums: vec![0; profiles],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn num_profiles(&self) -> usize {
        self.counts.len()
    }

    pub fn code(&self, arms: &[usize]) -> usize {
        arms.iter().fold(0, |acc, &k| acc * self.num_arms + k)
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut arms = vec![0; self.num_agents];
        for slot in arms.iter_mut().rev() {
            *slot = code % self.num_arms;
            code /= self.num_arms;
        }
        arms
    }

    pub fn count(&self, code: usize) -> u64 {
        self.counts[code]
    }

    pub fn utility_sum(&self, code: usize) -> u64 {
        self.sums[code]
    }

    /// Empirical utility, 0 for an unobserved profile.
    pub fn mean(&self, code: usize) -> f64 {
        match self.counts[code] {
            0 => 0.0,
            n => self.sums[code] as f64 / n as f64,
        }
    }

    pub fn record(&mut self, code: usize, utility: u64) {
        self.counts[code] += 1;
        self.sums[code] += utility;
    }

    /// Observed profiles with their `(count, utility_sum)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, u64, u64)> + '_ {
        (0..self.counts.len())
            .filter(|&c| self.counts[c] > 0)
            .map(|c| (c, self.counts[c], self.sums[c]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_mean() {
        let mut s = EdgeStats::from_parts(1, 2, vec![3, 0], vec![2, 0]).unwrap();
        s.record(0, 0, 1);
        assert_eq!((s.count(0, 0), s.sum(0, 0)), (4, 3));
        assert_eq!(s.mean(0, 0), 0.75);
        assert_eq!(s.mean(0, 1), 0.0);
        assert!(EdgeStats::from_parts(1, 2, vec![1, 0], vec![2, 0]).is_err());
    }

    #[test]
    fn codes_follow_lexicographic_order() {
        let p = ProfileStats::new(3, 4, 64);
        assert_eq!(p.code(&[0, 0, 0]), 0);
        assert_eq!(p.code(&[0, 0, 1]), 1);
        assert_eq!(p.code(&[1, 0, 0]), 16);
        for c in 0..64 {
            assert_eq!(p.code(&p.decode(c)), c);
        }
    }
}

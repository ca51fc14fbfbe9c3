use crate::error::{invalid, Error, Result};
use crate::instance::{AssignmentProfile, Matching, DEFAULT_ENUMERATION_CAP};

/// `K^M`, or `None` on overflow.
pub fn count_profiles(num_agents: usize, num_arms: usize) -> Option<u128> {
    (num_arms as u128).checked_pow(u32::try_from(num_agents).ok()?)
}

/// `K! / (K-M)!`, or `None` on overflow.
pub fn count_matchings(num_agents: usize, num_arms: usize) -> Option<u128> {
    if num_agents > num_arms {
        return Some(0);
    }
    (0..num_agents).try_fold(1u128, |acc, i| acc.checked_mul((num_arms - i) as u128))
}

fn check_cap(count: Option<u128>, cap: u128) -> Result<()> {
    match count {
        Some(c) if c <= cap => Ok(()),
        other => Err(Error::TooLarge {
            count: other.unwrap_or(u128::MAX),
            cap,
        }),
    }
}

/// Lexicographic odometer over all `K^M` arm vectors, without allocating them.
#[derive(Debug, Clone)]
pub struct ProfileIter {
    num_arms: usize,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl ProfileIter {
    pub fn new(num_agents: usize, num_arms: usize, cap: u128) -> Result<Self> {
        if num_agents == 0 || num_arms == 0 {
            return Err(invalid("need at least one agent and one arm"));
        }
        check_cap(count_profiles(num_agents, num_arms), cap)?;
        Ok(Self {
            num_arms,
            current: vec![0; num_agents],
            started: false,
            done: false,
        })
    }

    /// Advances and returns the next profile, or `None` once exhausted.
    pub fn next_profile(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        for slot in self.current.iter_mut().rev() {
            *slot += 1;
            if *slot < self.num_arms {
                return Some(&self.current);
            }
            *slot = 0;
        }
        self.done = true;
        None
    }
}

pub fn enumerate_profiles(num_agents: usize, num_arms: usize) -> Result<Vec<AssignmentProfile>> {
    enumerate_profiles_with_cap(num_agents, num_arms, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_profiles_with_cap(
    num_agents: usize,
    num_arms: usize,
    cap: u128,
) -> Result<Vec<AssignmentProfile>> {
    let mut iter = ProfileIter::new(num_agents, num_arms, cap)?;
    let mut out = Vec::new();
    while let Some(arms) = iter.next_profile() {
        out.push(AssignmentProfile::from_vec_unchecked(arms.to_vec()));
    }
    Ok(out)
}

pub fn enumerate_matchings(num_agents: usize, num_arms: usize) -> Result<Vec<Matching>> {
    enumerate_matchings_with_cap(num_agents, num_arms, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_matchings_with_cap(
    num_agents: usize,
    num_arms: usize,
    cap: u128,
) -> Result<Vec<Matching>> {
    if num_agents == 0 || num_agents > num_arms {
        return Err(invalid(format!(
            "need 1 <= M <= K, got M={num_agents}, K={num_arms}"
        )));
    }
    check_cap(count_matchings(num_agents, num_arms), cap)?;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(num_agents);
    let mut used = vec![false; num_arms];
    extend_matchings(num_agents, &mut current, &mut used, &mut out);
    Ok(out)
}

// Depth-first in arm order yields lexicographic output.
fn extend_matchings(
    num_agents: usize,
    current: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<Matching>,
) {
    if current.len() == num_agents {
        out.push(Matching::from_vec_unchecked(current.clone()));
        return;
    }
    for k in 0..used.len() {
        if !used[k] {
            used[k] = true;
            current.push(k);
            extend_matchings(num_agents, current, used, out);
            current.pop();
            used[k] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts() {
        assert_eq!(enumerate_profiles(2, 2).unwrap().len(), 4);
        assert_eq!(enumerate_matchings(2, 3).unwrap().len(), 6);
        let m34 = enumerate_matchings(3, 4).unwrap();
        assert_eq!(m34.len(), 24);
        assert!(m34.iter().all(|m| m.to_profile().is_injective()));
        assert_eq!(count_matchings(3, 5), Some(60));
    }

    #[test]
    fn lexicographic_and_duplicate_free() {
        let p = enumerate_profiles(3, 3).unwrap();
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p.iter().collect::<HashSet<_>>().len(), 27);
        assert_eq!(p[0].arms(), &[0, 0, 0]);
        let m = enumerate_matchings(2, 4).unwrap();
        assert!(m.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(m[0].arms(), &[0, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            enumerate_profiles_with_cap(3, 3, 26),
            Err(Error::TooLarge { count: 27, cap: 26 })
        ));
        assert!(enumerate_matchings_with_cap(3, 4, 23).is_err());
        assert!(enumerate_matchings(3, 2).is_err());
    }
}

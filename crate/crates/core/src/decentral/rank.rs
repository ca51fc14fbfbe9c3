//! Collision-driven rank assignment.
//!
//! Phase A repeats blocks of `K + 1` rounds. In the first slot every unfixed
//! agent tries a uniform arm and fixes on it if nobody else was there; fixed
//! agents hold. In the remaining `K` slots unfixed agents sweep the arms in
//! order while fixed agents hold, so a fixed agent sees a collision iff
//! someone is still unfixed. The first collision-free sweep therefore ends
//! Phase A for everyone at once.
//!
//! Phase B takes `K` blocks of `K` rounds. In block `j` the agent fixed on arm
//! `j` visits every arm; its collisions reveal which arms are occupied. The
//! rank is the position of the own arm among occupied arms and the number of
//! agents is the number of occupied arms. The block count is `K` rather than
//! `M` because `M` is not yet known.

use rand::Rng;

use crate::error::{Error, Result};

/// Rounds after which rank assignment is declared stuck.
pub const RANK_ROUND_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOutcome {
    /// 0-based rank of each agent.
    pub ranks: Vec<usize>,
    /// Each agent's estimate of the number of agents.
    pub agent_counts: Vec<usize>,
    pub rounds: u64,
    pub phase_a_blocks: u64,
}

#[derive(Debug, Clone)]
struct RankAgent {
    fixed: Option<usize>,
    swept_collision: bool,
    done_a: bool,
    occupied: Vec<bool>,
}

impl RankAgent {
    fn new(num_arms: usize) -> Self {
        Self {
            fixed: None,
            swept_collision: false,
            done_a: false,
            occupied: vec![false; num_arms],
        }
    }
}

/// Runs the protocol. `on_round` sees each round's arms and collision flags.
pub fn run_rank_assignment<R: Rng>(
    num_arms: usize,
    agent_rngs: &mut [R],
    mut on_round: impl FnMut(&[usize], &[bool]) -> Result<()>,
) -> Result<RankOutcome> {
    let num_agents = agent_rngs.len();
    let mut agents = vec![RankAgent::new(num_arms); num_agents];
    let mut arms = vec![0usize; num_agents];
    let mut collided = vec![false; num_agents];
    let mut rounds = 0u64;
    let mut blocks = 0u64;

    let mut play = |arms: &[usize], collided: &mut [bool], rounds: &mut u64| -> Result<()> {
        for (m, c) in collided.iter_mut().enumerate() {
            *c = arms.iter().enumerate().any(|(o, &a)| o != m && a == arms[m]);
        }
        *rounds += 1;
        if *rounds > RANK_ROUND_CAP {
            return Err(Error::ProtocolFailure(format!(
                "rank assignment exceeded {RANK_ROUND_CAP} rounds"
            )));
        }
        on_round(arms, collided)
    };

    // Phase A.
    loop {
        blocks += 1;
        let mut tried = vec![None; num_agents];
        for (m, agent) in agents.iter().enumerate() {
            arms[m] = match agent.fixed {
                Some(a) => a,
                None => {
                    let a = agent_rngs[m].gen_range(0..num_arms);
                    tried[m] = Some(a);
                    a
                }
            };
        }
        play(&arms, &mut collided, &mut rounds)?;
        for (m, agent) in agents.iter_mut().enumerate() {
            if let Some(a) = tried[m] {
                if !collided[m] {
                    agent.fixed = Some(a);
                }
            }
            agent.swept_collision = false;
        }
        for sweep in 0..num_arms {
            for (m, agent) in agents.iter().enumerate() {
                arms[m] = agent.fixed.unwrap_or(sweep);
            }
            play(&arms, &mut collided, &mut rounds)?;
            for (m, agent) in agents.iter_mut().enumerate() {
                if agent.fixed.is_some() && collided[m] {
                    agent.swept_collision = true;
                }
            }
        }
        for agent in agents.iter_mut() {
            agent.done_a = agent.fixed.is_some() && !agent.swept_collision;
        }
        let done = agents.iter().filter(|a| a.done_a).count();
        if done == num_agents {
            break;
        }
        if done != 0 {
            return Err(Error::ProtocolFailure(
                "agents disagree on the end of orthogonalization".into(),
            ));
        }
    }

    // Phase B.
    for hop_arm in 0..num_arms {
        for visit in 0..num_arms {
            for (m, agent) in agents.iter().enumerate() {
                let own = agent.fixed.expect("all agents fixed after phase A");
                arms[m] = if own == hop_arm { visit } else { own };
            }
            play(&arms, &mut collided, &mut rounds)?;
            for (m, agent) in agents.iter_mut().enumerate() {
                let own = agent.fixed.expect("fixed");
                if own == hop_arm {
                    agent.occupied[visit] = visit == own || collided[m];
                }
            }
        }
    }

    let ranks = agents
        .iter()
        .map(|a| {
            let own = a.fixed.expect("fixed");
            a.occupied[..own].iter().filter(|&&o| o).count()
        })
        .collect();
    let agent_counts = agents
        .iter()
        .map(|a| a.occupied.iter().filter(|&&o| o).count())
        .collect();
    Ok(RankOutcome {
        ranks,
        agent_counts,
        rounds,
        phase_a_blocks: blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(m: usize, k: usize, seed: u64) -> RankOutcome {
        let mut rngs: Vec<_> = (0..m)
            .map(|i| ChaCha8Rng::seed_from_u64(seed * 1000 + i as u64))
            .collect();
        run_rank_assignment(k, &mut rngs, |_, _| Ok(())).unwrap()
    }

    #[test]
    fn single_agent_finishes_in_one_block() {
        let out = run(1, 4, 3);
        assert_eq!(out.ranks, vec![0]);
        assert_eq!(out.agent_counts, vec![1]);
        assert_eq!(out.phase_a_blocks, 1);
        assert_eq!(out.rounds, 5 + 16);
    }

    #[test]
    fn ranks_are_distinct_and_count_is_right() {
        for seed in 0..1000 {
            let out = run(2, 3, seed);
            let mut r = out.ranks.clone();
            r.sort_unstable();
            assert_eq!(r, vec![0, 1]);
            assert!(out.agent_counts.iter().all(|&c| c == 2));
            assert_eq!(out.rounds, out.phase_a_blocks * 4 + 9);
        }
    }

    #[test]
    fn full_house() {
        let out = run(3, 3, 8);
        let mut r = out.ranks.clone();
        r.sort_unstable();
        assert_eq!(r, vec![0, 1, 2]);
    }
}

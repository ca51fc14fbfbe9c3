//! Simulation library for hinted heterogeneous multi-agent bandits: the
//! collision environment, matching primitives, kl-UCB indices, centralized
//! hinted policies, a lockstep decentralized protocol simulator and a seeded
//! Monte Carlo harness.

pub mod central;
pub mod decentral;
pub mod error;
pub mod harness;
pub mod instance;
pub mod klucb;
pub mod matching;
pub mod seeding;

pub use error::{Error, Result};
pub use instance::{
    generate_instance, sample_round, summarize, utility, AssignmentProfile, InstanceSummary,
    Matching, RewardMatrix, RoundOutcome,
};

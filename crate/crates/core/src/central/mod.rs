//! Centralized hinted learners: one controller sees every observation and
//! picks both the pulled profile and the hint profile.

mod policy;
mod stats;

pub use policy::{
    apply_edge_observations, apply_profile_observations, edge_step, ghcla_step, gphcla_step,
    hcla_step, projection_index, CentralKind, CentralPolicy, PolicyDecision,
};
pub use stats::{EdgeStats, ProfileStats};

use crate::error::{invalid, Result};

/// Exploration length for the known-gap explore-then-commit protocol:
/// `ceil(9 M^2 K ln(2 M T) / gap^2)` rounds.
pub fn hd_etc_threshold(num_agents: usize, num_arms: usize, horizon: u64, gap: f64) -> Result<u64> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(invalid(format!("gap must be positive, got {gap}")));
    }
    if horizon == 0 {
        return Err(invalid("horizon must be positive"));
    }
    let m = num_agents as f64;
    let t0 = 9.0 * m * m * num_arms as f64 * (2.0 * m * horizon as f64).ln() / (gap * gap);
    Ok((t0.ceil() as u64).max(1))
}

/// Confidence schedule for the elimination protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminationParams {
    /// `sqrt(2 / (M T^2))`.
    pub eta: f64,
    log_term: f64,
}

impl EliminationParams {
    pub fn new(num_agents: usize, horizon: u64) -> Result<Self> {
        if num_agents == 0 || horizon == 0 {
            return Err(invalid("need at least one agent and a positive horizon"));
        }
        let t = horizon as f64;
        let eta = (2.0 / (num_agents as f64 * t * t)).sqrt();
        Ok(Self {
            eta,
            log_term: (2.0 / eta).ln(),
        })
    }

    /// `sqrt(ln(2/eta) / r)` after `r >= 1` epochs.
    pub fn epsilon(&self, epochs: u64) -> f64 {
        (self.log_term / epochs.max(1) as f64).sqrt()
    }
}

/// Upper bound on the stopping epoch of the elimination protocol:
/// `64 M^2 ln(T sqrt(2M)) / gap^2`.
pub fn elimination_epoch_bound(num_agents: usize, horizon: u64, gap: f64) -> f64 {
    let m = num_agents as f64;
    64.0 * m * m * (horizon as f64 * (2.0 * m).sqrt()).ln() / (gap * gap)
}

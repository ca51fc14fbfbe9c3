//! Bernoulli KL divergence and kl-UCB indices.

use crate::error::{invalid, Result};

const BISECTION_ITERS: usize = 64;
const BISECTION_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-7;

/// `kl(p, q)` between Bernoulli laws, with `0 ln 0 = 0`.
///
/// Returns `+inf` when `q` is 0 or 1 and `p != q`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("kl arguments must lie in [0, 1], got ({p}, {q})")));
    }
    Ok(kl_unchecked(p, q))
}

#[inline]
pub(crate) fn kl_unchecked(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    if q <= 0.0 || q >= 1.0 {
        return f64::INFINITY;
    }
    let a = if p > 0.0 { p * (p / q).ln() } else { 0.0 };
    let b = if p < 1.0 { (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln() } else { 0.0 };
    (a + b).max(0.0)
}

/// `f(t) = ln t + 4 ln ln t`, taken as 0 for `t < 3` and clamped at 0.
pub fn exploration_rate(t: u64) -> f64 {
    if t < 3 {
        return 0.0;
    }
    let lt = (t as f64).ln();
    (lt + 4.0 * lt.ln()).max(0.0)
}

/// Largest `q` in `[mean, 1]` with `pulls * kl(mean, q) <= f(t)`; 1 for unpulled edges.
pub fn klucb_index(mean: f64, pulls: u64, t: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mean) {
        return Err(invalid(format!("empirical mean {mean} outside [0, 1]")));
    }
    if t == 0 {
        return Err(invalid("time must be at least 1"));
    }
    Ok(index_unchecked(mean, pulls, exploration_rate(t)))
}

/// Index for a precomputed exploration rate `rate = f(t)`.
pub(crate) fn index_unchecked(mean: f64, pulls: u64, rate: f64) -> f64 {
    if pulls == 0 {
        return 1.0;
    }
    let budget = rate / pulls as f64;
    if budget <= 0.0 {
        return mean;
    }
    // A root within the tolerance of 1 is reported as 1: doubles that close to
    // 1 are too sparse to pin the residual down.
    if kl_unchecked(mean, 1.0 - BISECTION_TOL) <= budget {
        return 1.0;
    }
    // Near q = 1 the divergence is steep, so an interval of width 1e-9 can still
    // leave a visible residual; keep halving until both are small.
    let (mut lo, mut hi) = (mean, 1.0);
    let mut kl_lo = 0.0;
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= BISECTION_TOL && (budget - kl_lo) * pulls as f64 <= RESIDUAL_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let kl_mid = kl_unchecked(mean, mid);
        if kl_mid <= budget {
            lo = mid;
            kl_lo = kl_mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Index on utilities in `[0, M]`: solve on `mean / M`, rescale by `M`.
pub fn profile_index(mean_per_agent: f64, pulls: u64, t: u64, num_agents: usize) -> Result<f64> {
    Ok(num_agents as f64 * klucb_index(mean_per_agent, pulls, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(kl_bernoulli(0.0, 0.5).unwrap(), std::f64::consts::LN_2, epsilon = 1e-12);
        // 0.3 ln(3/7) + 0.7 ln(7/3) = 0.4 ln(7/3)
        assert_abs_diff_eq!(kl_bernoulli(0.3, 0.7).unwrap(), 0.338_919_144, epsilon = 1e-8);
        assert_eq!(kl_bernoulli(0.3, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(kl_bernoulli(0.0, 0.0).unwrap(), 0.0);
        assert!(kl_bernoulli(1.5, 0.5).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(exploration_rate(1), 0.0);
        assert_eq!(exploration_rate(2), 0.0);
        assert_abs_diff_eq!(exploration_rate(20), 7.384_488, epsilon = 1e-5);
        assert_abs_diff_eq!(exploration_rate(1000), 14.638_335, epsilon = 1e-5);
    }

    #[test]
    fn index_examples() {
        assert_eq!(klucb_index(0.5, 0, 10).unwrap(), 1.0);
        assert_eq!(klucb_index(1.0, 5, 10).unwrap(), 1.0);
        assert_abs_diff_eq!(klucb_index(0.5, 100, 1000).unwrap(), 0.751_895, epsilon = 1e-5);
        assert_eq!(klucb_index(0.3, 4, 2).unwrap(), 0.3);
        assert!(klucb_index(-0.1, 4, 2).is_err());
        assert!(klucb_index(0.1, 4, 0).is_err());
    }

    #[test]
    fn profile_examples() {
        assert_eq!(profile_index(0.0, 0, 1, 2).unwrap(), 2.0);
        assert_abs_diff_eq!(profile_index(0.5, 100, 1000, 1).unwrap(), 0.751_895, epsilon = 1e-5);
        assert_abs_diff_eq!(profile_index(0.5, 100, 1000, 3).unwrap(), 2.255_684, epsilon = 3e-5);
    }

    proptest! {
        #[test]
        fn index_dominates_mean_and_solves_equation(
            mean in 0.0f64..=1.0,
            pulls in 1u64..10_000,
            t in 3u64..1_000_000,
        ) {
            let d = klucb_index(mean, pulls, t).unwrap();
            prop_assert!(d >= mean);
            if d < 1.0 - 1e-9 {
                let resid = pulls as f64 * kl_unchecked(mean, d) - exploration_rate(t);
                prop_assert!(resid.abs() <= 1e-6, "residual {resid}");
            }
        }
    }
}

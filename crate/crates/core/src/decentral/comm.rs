//! Quantized estimates and their differential encoding over the collision
//! channel.
//!
//! After `r` completed exploration epochs each estimate is rounded up onto the
//! dyadic grid of step `2^-q`, `q = ceil(log4 r)`, so the rounding error stays
//! below `1/sqrt(r)`. Differences between consecutive grids are sent as
//! sign-magnitude integers of `q + 2` bits, which always suffices because a
//! difference of two values in `[0, 1]` is at most `2^q` grid steps.

/// Grid exponent `q = ceil(log4 r)` for `r >= 1` completed epochs.
pub fn quant_level(epochs: u64) -> u32 {
    let epochs = epochs.max(1);
    let mut q = 0;
    while 4u128.pow(q) < u128::from(epochs) {
        q += 1;
    }
    q
}

/// Rounds `mean` up to the grid for `epochs` completed epochs, capped at 1.
pub fn quantize(mean: f64, epochs: u64) -> f64 {
    let scale = f64::from(1u32 << quant_level(epochs));
    ((mean * scale).ceil() / scale).min(1.0)
}

/// Exact `ceil(sum / count)` on the grid, computed in integers.
pub(crate) fn quantize_counts(sum: u64, count: u64, epochs: u64) -> f64 {
    let q = quant_level(epochs);
    if count == 0 {
        return 0.0;
    }
    let units = (u128::from(sum) << q).div_ceil(u128::from(count));
    units as f64 / f64::from(1u32 << q)
}

/// Bits per transmitted difference: one sign bit plus `q + 1` magnitude bits.
pub fn bit_width(epochs: u64) -> u32 {
    quant_level(epochs) + 2
}

/// Length of a full communication phase: every ordered pair of agents, every
/// arm, one round per bit.
pub fn comm_rounds(num_agents: usize, num_arms: usize, epochs: u64) -> u64 {
    (num_agents * num_agents.saturating_sub(1) * num_arms) as u64 * u64::from(bit_width(epochs))
}

/// An encoded difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffPayload {
    /// Signed difference in grid units, after any clamping.
    pub units: i64,
    /// Set when the true difference did not fit the bit width.
    pub saturated: bool,
}

fn max_magnitude(width: u32) -> i64 {
    (1i64 << (width - 1)) - 1
}

/// Encodes `next - prev` in units of the grid for `epochs` completed epochs.
pub fn encode_diff(next: f64, prev: f64, epochs: u64) -> DiffPayload {
    let scale = f64::from(1u32 << quant_level(epochs));
    let raw = ((next - prev) * scale).round() as i64;
    let cap = max_magnitude(bit_width(epochs));
    DiffPayload {
        units: raw.clamp(-cap, cap),
        saturated: raw.abs() > cap,
    }
}

pub fn decode_diff(prev: f64, units: i64, epochs: u64) -> f64 {
    prev + units as f64 / f64::from(1u32 << quant_level(epochs))
}

/// Sign bit first, then magnitude most-significant bit first.
pub fn payload_bits(units: i64, width: u32) -> Vec<bool> {
    let mag = units.unsigned_abs();
    std::iter::once(units < 0)
        .chain((0..width - 1).rev().map(|i| (mag >> i) & 1 == 1))
        .collect()
}

pub fn bits_payload(bits: &[bool]) -> i64 {
    let mag = bits[1..].iter().fold(0i64, |acc, &b| (acc << 1) | i64::from(b));
    if bits[0] {
        -mag
    } else {
        mag
    }
}

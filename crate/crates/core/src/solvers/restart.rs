//! Interpolation sequence and restart-period rules for the accelerated methods.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One step of the interpolation sequence,
/// `theta' = (sqrt(theta^4 + 4 theta^2) - theta^2) / 2`.
///
/// Evaluated as `2 theta / (theta + sqrt(theta^2 + 4))`, which is the same
/// quantity without the cancellation for small `theta`.
#[inline]
pub fn theta_next<T: Scalar>(theta: T) -> T {
    let two = T::lit(2.0);
    two * theta / (theta + (theta * theta + T::lit(4.0)).sqrt())
}

/// Restart periods, in inner iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartSchedule {
    /// Every period has the same length.
    Fixed(usize),
    /// `K_r = K_0 * 2^v(r+1)`, with `v` the 2-adic valuation:
    /// `K_0, 2K_0, K_0, 4K_0, K_0, 2K_0, K_0, 8K_0, ...`
    Doubling(usize),
}

impl RestartSchedule {
    pub fn fixed(period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("restart period must be at least 1"));
        }
        Ok(RestartSchedule::Fixed(period))
    }

    pub fn doubling(base: usize) -> Result<Self> {
        if base == 0 {
            return Err(Error::invalid("base restart period must be at least 1"));
        }
        Ok(RestartSchedule::Doubling(base))
    }

    /// Length of period `r` (0-based).
    pub fn period(&self, r: usize) -> usize {
        match *self {
            RestartSchedule::Fixed(k) => k,
            RestartSchedule::Doubling(k0) => doubling_period(k0, r),
        }
    }
}

/// `K_r = K_0 * 2^v(r+1)` where `v` counts trailing zero bits.
pub fn doubling_period(base: usize, r: usize) -> usize {
    let v = (r + 1).trailing_zeros();
    base.checked_shl(v)
        .filter(|k| k >> v == base)
        .expect("restart period overflows usize")
}

fn check_positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn ceil_to_period<T: Scalar>(raw: T) -> Result<usize> {
    raw.ceil()
        .max(T::one())
        .to_usize()
        .ok_or_else(|| Error::invalid(format!("restart period {raw} does not fit in usize")))
}

/// Fixed restart period `K* = ceil(2 e M (sqrt((L_max + gamma)/gamma) - 1) + 1)`.
pub fn restart_period_kstar<T: Scalar>(blocks: usize, l_max: T, gamma: T) -> Result<usize> {
    if blocks == 0 {
        return Err(Error::invalid("block count must be positive"));
    }
    check_positive("L_max", l_max)?;
    check_positive("gamma", gamma)?;
    let m = T::from_usize_lossy(blocks);
    let e = T::lit(std::f64::consts::E);
    let raw = T::lit(2.0) * e * m * (((l_max + gamma) / gamma).sqrt() - T::one()) + T::one();
    ceil_to_period(raw)
}

/// Smallest period `k >= 2M (sqrt((L_max + gamma)/(zeta gamma)) - 1) + 1`
/// after which one restarted run contracts the expected Bregman distance
/// by `zeta`.
pub fn period_for_zeta<T: Scalar>(blocks: usize, l_max: T, gamma: T, zeta: T) -> Result<usize> {
    if blocks == 0 {
        return Err(Error::invalid("block count must be positive"));
    }
    check_positive("L_max", l_max)?;
    check_positive("gamma", gamma)?;
    if !(zeta > T::zero() && zeta < T::one()) {
        return Err(Error::invalid(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    let m = T::from_usize_lossy(blocks);
    let raw = T::lit(2.0) * m * (((l_max + gamma) / (zeta * gamma)).sqrt() - T::one()) + T::one();
    ceil_to_period(raw)
}

//! Block sampling distribution `p_i ∝ L_i^alpha` and seeded random streams.
//!
//! All randomness comes from xoshiro256++ seeded through SplitMix64 from a
//! single `u64`, so a seed reproduces the same stream on every platform.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type SeededRng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// `p_i = L_i^alpha / sum_j L_j^alpha`.
///
/// `alpha = 0` is uniform sampling, `alpha = 1` samples proportionally to
/// the block Lipschitz constants.
pub fn block_probabilities<T: Scalar>(lipschitz: &[T], alpha: T) -> Result<Vec<T>> {
    if lipschitz.is_empty() {
        return Err(Error::invalid("no blocks to sample from"));
    }
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if let Some(l) = lipschitz.iter().find(|l| !(**l > T::zero() && l.is_finite())) {
        return Err(Error::invalid(format!(
            "block Lipschitz constants must be positive, got {l}"
        )));
    }
    let w: Vec<T> = lipschitz.iter().map(|l| l.powf(alpha)).collect();
    let total: T = w.iter().copied().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Draws block indices from a fixed discrete distribution by inverse CDF.
#[derive(Debug, Clone)]
pub struct BlockSampler<T> {
    probabilities: Vec<T>,
    cumulative: Vec<T>,
    rng: SeededRng,
}

impl<T: Scalar> BlockSampler<T> {
    pub fn new(lipschitz: &[T], alpha: T, seed: u64) -> Result<Self> {
        Self::from_probabilities(block_probabilities(lipschitz, alpha)?, seed)
    }

    /// Uses the given probabilities directly. Zero entries are allowed and
    /// are never drawn.
    pub fn from_probabilities(probabilities: Vec<T>, seed: u64) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("no blocks to sample from"));
        }
        if probabilities.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let mut acc = T::zero();
        let cumulative: Vec<T> = probabilities
            .iter()
            .map(|&p| {
                acc = acc + p;
                acc
            })
            .collect();
        if (acc - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::invalid(format!("probabilities sum to {acc}, not 1")));
        }
        Ok(Self {
            probabilities,
            cumulative,
            rng: rng_from_seed(seed),
        })
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn cumulative(&self) -> &[T] {
        &self.cumulative
    }

    /// Maps `u` in `[0, 1)` to the unique `i` with
    /// `cumulative[i-1] <= u < cumulative[i]`.
    ///
    /// Round-off that leaves `u` past the last cumulative value falls back to
    /// the last block with positive probability.
    pub fn index_for(&self, u: T) -> usize {
        if let Some(i) = self.cumulative.iter().position(|&c| u < c) {
            return i;
        }
        self.probabilities
            .iter()
            .rposition(|p| *p > T::zero())
            .unwrap_or(self.probabilities.len() - 1)
    }

    /// Next block index (0-based).
    #[inline]
    pub fn sample(&mut self) -> usize {
        if self.probabilities.len() == 1 {
            return 0;
        }
        let u: f64 = self.rng.gen();
        self.index_for(T::lit(u))
    }
}

/// Standard normal variates by the Box–Muller transform.
#[derive(Debug, Clone)]
pub struct BoxMuller {
    rng: SeededRng,
    spare: Option<f64>,
}

impl BoxMuller {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng_from_seed(seed),
            spare: None,
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }

    pub fn fill<T: Scalar>(&mut self, out: &mut [T]) {
        for v in out {
            *v = T::lit(self.next_normal());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn probability_examples() {
        let l = [4.0, 1.0, 1.0];
        assert!(close(&block_probabilities(&l, 0.0).unwrap(), &[1.0 / 3.0; 3]));
        assert!(close(
            &block_probabilities(&l, 1.0).unwrap(),
            &[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]
        ));
        for a in [0.0, 0.3, 1.0] {
            assert!(close(&block_probabilities(&[4.0, 4.0], a).unwrap(), &[0.5, 0.5]));
        }
    }

    #[test]
    fn probability_errors() {
        assert!(block_probabilities(&[1.0, 0.0], 0.5).is_err());
        assert!(block_probabilities(&[1.0, -1.0], 0.5).is_err());
        assert!(block_probabilities(&[1.0], 1.5).is_err());
        assert!(block_probabilities(&[1.0], -0.1).is_err());
        assert!(block_probabilities::<f64>(&[], 0.0).is_err());
    }

    #[test]
    fn degenerate_distributions() {
        let mut s = BlockSampler::new(&[3.0], 1.0, 7).unwrap();
        assert!((0..100).all(|_| s.sample() == 0));
        let mut s = BlockSampler::from_probabilities(vec![1.0, 0.0], 7).unwrap();
        assert!((0..10_000).all(|_| s.sample() == 0));
        let mut s = BlockSampler::from_probabilities(vec![0.0, 1.0, 0.0], 7).unwrap();
        assert!((0..10_000).all(|_| s.sample() == 1));
    }

    #[test]
    fn inverse_cdf_boundaries() {
        let s = BlockSampler::from_probabilities(vec![0.25, 0.5, 0.25], 0).unwrap();
        assert_eq!(s.index_for(0.0), 0);
        assert_eq!(s.index_for(0.2499), 0);
        assert_eq!(s.index_for(0.25), 1);
        assert_eq!(s.index_for(0.75), 2);
        assert_eq!(s.index_for(0.999_999), 2);
        assert_eq!(s.index_for(1.0), 2);
    }

    #[test]
    fn seed_replay() {
        let l = [1.0, 2.0, 3.0, 4.0];
        let mut a = BlockSampler::new(&l, 0.5, 42).unwrap();
        let mut b = BlockSampler::new(&l, 0.5, 42).unwrap();
        let sa: Vec<_> = (0..1000).map(|_| a.sample()).collect();
        let sb: Vec<_> = (0..1000).map(|_| b.sample()).collect();
        assert_eq!(sa, sb);
        let mut c = BlockSampler::new(&l, 0.5, 43).unwrap();
        let sc: Vec<_> = (0..1000).map(|_| c.sample()).collect();
        assert_ne!(sa, sc);
    }

    #[test]
    fn box_muller_moments() {
        let mut g = BoxMuller::new(1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| g.next_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }
}

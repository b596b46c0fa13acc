//! Strongly convex objectives `f`, their conjugates and Bregman distances.
//!
//! The solvers only ever touch `f` through [`Potential::conj_grad`] (to map a
//! dual point `d` to the primal point `x = grad f*(d)`), plus the values
//! needed for diagnostics. Every shipped potential is 1-strongly convex, so
//! `grad f*` is 1-Lipschitz.

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// Componentwise soft shrinkage `sign(x_j) * max(|x_j| - lambda, 0)`.
pub fn soft_shrinkage<T: Scalar>(x: &[T], lambda: T) -> Vec<T> {
    x.iter().map(|&v| shrink(v, lambda)).collect()
}

#[inline]
fn shrink<T: Scalar>(v: T, lambda: T) -> T {
    let a = v.abs() - lambda;
    if a > T::zero() {
        a.copysign(v)
    } else {
        T::zero()
    }
}

/// A partition of the coordinates `0..n` into disjoint groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateGroups {
    dim: usize,
    groups: Vec<Vec<usize>>,
}

impl CoordinateGroups {
    pub fn new(dim: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::invalid("empty coordinate group"));
            }
            for &j in g {
                if j >= dim || seen[j] {
                    return Err(Error::invalid(format!(
                        "coordinate {j} is out of range or appears in two groups"
                    )));
                }
                seen[j] = true;
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("coordinate {j} belongs to no group")));
        }
        Ok(Self { dim, groups })
    }

    /// Consecutive groups of `size` coordinates (the last may be shorter).
    pub fn contiguous(dim: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("group size must be positive"));
        }
        let groups = (0..dim)
            .step_by(size)
            .map(|s| (s..(s + size).min(dim)).collect())
            .collect();
        Self::new(dim, groups)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    fn group_norm<T: Scalar>(g: &[usize], v: &[T]) -> T {
        g.iter().fold(T::zero(), |acc, &j| acc + v[j] * v[j]).sqrt()
    }
}

/// The objective `f` of `min f(x) s.t. Ax = b`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential<T> {
    /// `f(x) = 1/2 ||x||^2`; recovers the classical randomized Kaczmarz method.
    SquaredNorm,
    /// `f(x) = lambda ||x||_1 + 1/2 ||x||^2`.
    Sparse { lambda: T },
    /// `f(x) = lambda sum_g ||x_g||_2 + 1/2 ||x||^2`.
    GroupSparse { lambda: T, groups: CoordinateGroups },
}

/// `f(y)`, `f*(d)` and the Bregman distance `D_f^d(grad f*(d), y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanEvaluation<T> {
    pub f_value: T,
    pub conj_value: T,
    pub distance: T,
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if lambda.is_finite() && lambda >= T::zero() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )))
    }
}

impl<T: Scalar> Potential<T> {
    pub fn squared_norm() -> Self {
        Potential::SquaredNorm
    }

    pub fn sparse(lambda: T) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Potential::Sparse { lambda })
    }

    pub fn group_sparse(lambda: T, groups: CoordinateGroups) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Potential::GroupSparse { lambda, groups })
    }

    /// The shrinkage level, zero for the squared norm.
    pub fn lambda(&self) -> T {
        match self {
            Potential::SquaredNorm => T::zero(),
            Potential::Sparse { lambda } | Potential::GroupSparse { lambda, .. } => *lambda,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::SquaredNorm => "squared-norm",
            Potential::Sparse { .. } => "sparse",
            Potential::GroupSparse { .. } => "group-sparse",
        }
    }

    fn check_dim(&self, len: usize) {
        if let Potential::GroupSparse { groups, .. } = self {
            assert_eq!(len, groups.dim(), "vector length does not match coordinate groups");
        }
    }

    pub fn f_value(&self, x: &[T]) -> T {
        self.check_dim(x.len());
        let half = T::lit(0.5);
        let quad = half * scalar::norm_sq(x);
        match self {
            Potential::SquaredNorm => quad,
            Potential::Sparse { lambda } => *lambda * x.iter().fold(T::zero(), |acc, v| acc + v.abs()) + quad,
            Potential::GroupSparse { lambda, groups } => {
                let s: T = groups.groups().iter().map(|g| CoordinateGroups::group_norm(g, x)).sum();
                *lambda * s + quad
            }
        }
    }

    pub fn conj_value(&self, d: &[T]) -> T {
        self.check_dim(d.len());
        let half = T::lit(0.5);
        match self {
            Potential::SquaredNorm => half * scalar::norm_sq(d),
            Potential::Sparse { lambda } => {
                half * d.iter().fold(T::zero(), |acc, &v| {
                    let s = shrink(v, *lambda);
                    acc + s * s
                })
            }
            Potential::GroupSparse { lambda, groups } => groups
                .groups()
                .iter()
                .map(|g| {
                    let excess = (CoordinateGroups::group_norm(g, d) - *lambda).max(T::zero());
                    half * excess * excess
                })
                .sum(),
        }
    }

    pub fn conj_grad(&self, d: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); d.len()];
        self.conj_grad_into(d, &mut out);
        out
    }

    /// `out = grad f*(d)`.
    pub fn conj_grad_into(&self, d: &[T], out: &mut [T]) {
        self.check_dim(d.len());
        assert_eq!(d.len(), out.len());
        match self {
            Potential::SquaredNorm => out.copy_from_slice(d),
            Potential::Sparse { lambda } => {
                for (o, &v) in out.iter_mut().zip(d) {
                    *o = shrink(v, *lambda);
                }
            }
            Potential::GroupSparse { lambda, groups } => {
                for g in groups.groups() {
                    let nrm = CoordinateGroups::group_norm(g, d);
                    let scale = if nrm > *lambda {
                        (nrm - *lambda) / nrm
                    } else {
                        T::zero()
                    };
                    for &j in g {
                        out[j] = d[j] * scale;
                    }
                }
            }
        }
    }

    /// `D_f^d(x, y) = f*(d) - <d, y> + f(y)` with `x = grad f*(d)`.
    ///
    /// Tiny negative values produced by cancellation are reported as zero.
    pub fn bregman_distance(&self, d: &[T], y: &[T]) -> T {
        self.bregman(d, y).distance
    }

    pub fn bregman(&self, d: &[T], y: &[T]) -> BregmanEvaluation<T> {
        assert_eq!(d.len(), y.len());
        let f_value = self.f_value(y);
        let conj_value = self.conj_value(d);
        let raw = conj_value - scalar::dot(d, y) + f_value;
        BregmanEvaluation {
            f_value,
            conj_value,
            distance: raw.max(T::zero()),
        }
    }
}

//! Dual-side diagnostics and convergence-bound evaluators.
//!
//! These are oracles for testing the solvers, not part of the iteration:
//! the dual objective `Psi(y) = f*(A^T y) - b^T y` and its gradient, the
//! identity `D_f^{A^T y}(x, x_hat) = Psi(y) - Psi_hat`, the brute-force
//! error-bound constant `gamma(x_hat)` for the sparse objective, and the
//! closed-form rate bounds.

use crate::error::{Error, Result};
use crate::linops::{svd, BlockPartition, DenseMatrix};
use crate::potentials::Potential;
use crate::problems::ProblemInstance;
use crate::scalar::{self, Scalar};

/// Largest column count accepted by [`pl_constant_bruteforce`].
pub const MAX_BRUTE_FORCE_COLS: usize = 16;

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// `Psi(y) = f*(A^T y) - b^T y`.
pub fn dual_objective<T: Scalar>(problem: &ProblemInstance<T>, potential: &Potential<T>, y: &[T]) -> T {
    potential.conj_value(&problem.a.apply_transpose(y)) - scalar::dot(&problem.b, y)
}

/// `grad Psi(y) = A grad f*(A^T y) - b`.
pub fn dual_gradient<T: Scalar>(problem: &ProblemInstance<T>, potential: &Potential<T>, y: &[T]) -> Vec<T> {
    let x = potential.conj_grad(&problem.a.apply_transpose(y));
    let mut g = problem.a.apply(&x);
    for (gi, &bi) in g.iter_mut().zip(&problem.b) {
        *gi = *gi - bi;
    }
    g
}

/// A dual point with its objective value and squared gradient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint<T> {
    pub y: Vec<T>,
    pub psi: T,
    pub grad_norm_sq: T,
}

impl<T: Scalar> DualPoint<T> {
    pub fn evaluate(problem: &ProblemInstance<T>, potential: &Potential<T>, y: Vec<T>) -> Self {
        let psi = dual_objective(problem, potential, &y);
        let grad_norm_sq = scalar::norm_sq(&dual_gradient(problem, potential, &y));
        Self { y, psi, grad_norm_sq }
    }
}

/// Both sides of `D_f^d(x, x_hat) = Psi(y) - Psi_hat` with `d = A^T y`,
/// `x = grad f*(d)` and `Psi_hat = -f(x_hat)`.
///
/// The left side uses the primal definition
/// `f(x_hat) - f(x) - <d, x_hat - x>`; the right side only the dual objective.
pub fn duality_gap_identity<T: Scalar>(
    problem: &ProblemInstance<T>,
    potential: &Potential<T>,
    y: &[T],
    x_hat: &[T],
) -> (T, T) {
    let d = problem.a.apply_transpose(y);
    let x = potential.conj_grad(&d);
    let diff: Vec<T> = x_hat.iter().zip(&x).map(|(&a, &b)| a - b).collect();
    let bregman = potential.f_value(x_hat) - potential.f_value(&x) - scalar::dot(&d, &diff);
    let dual_subopt = dual_objective(problem, potential, y) + potential.f_value(x_hat);
    (bregman, dual_subopt)
}

/// Error-bound constant of the sparse objective,
/// `gamma = (|x_hat|_min + 2 lambda) / (|x_hat|_min * sigma_tilde_min^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlCertificate<T> {
    pub gamma: T,
    pub sigma_tilde_min: T,
    pub x_hat_min_abs: T,
}

impl<T: Scalar> PlCertificate<T> {
    /// PL constant `mu = 1 / (2 gamma)` of the dual objective.
    pub fn mu(&self) -> T {
        T::one() / (T::lit(2.0) * self.gamma)
    }
}

/// Smallest positive singular value over all nonzero column submatrices.
///
/// Enumerates all `2^n - 1` column subsets.
pub fn sigma_tilde_min<T: Scalar>(a: &DenseMatrix<T>) -> Result<T> {
    let n = a.cols();
    if n > MAX_BRUTE_FORCE_COLS {
        return Err(Error::invalid(format!(
            "subset enumeration limited to {MAX_BRUTE_FORCE_COLS} columns, got {n}"
        )));
    }
    let rank_tol = T::lit(RANK_TOL);
    let mut best: Option<T> = None;
    let mut cols = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        cols.clear();
        cols.extend((0..n).filter(|j| mask & (1 << j) != 0));
        let sub = a.select_columns(&cols);
        if sub.iter().all(|v| v.is_zero()) {
            continue;
        }
        let sv = svd::singular_values(a.rows(), cols.len(), &sub)?;
        let cutoff = rank_tol * sv[0];
        if let Some(&s) = sv.iter().rev().find(|&&s| s > cutoff) {
            best = Some(best.map_or(s, |b: T| b.min(s)));
        }
    }
    best.ok_or_else(|| Error::invalid("matrix is identically zero"))
}

/// Brute-force `gamma(x_hat)` for `f = lambda ||x||_1 + 1/2 ||x||^2`.
pub fn pl_constant_bruteforce<T: Scalar>(a: &DenseMatrix<T>, x_hat: &[T], lambda: T) -> Result<PlCertificate<T>> {
    if x_hat.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: x_hat.len(),
        });
    }
    let x_min = x_hat
        .iter()
        .filter(|v| !v.is_zero())
        .map(|v| v.abs())
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
        .ok_or_else(|| Error::UndefinedConstant("|x_hat|_min is undefined for x_hat = 0".into()))?;
    if !(lambda >= T::zero()) {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    let sigma = sigma_tilde_min(a)?;
    let gamma = (x_min + T::lit(2.0) * lambda) / (x_min * sigma * sigma);
    Ok(PlCertificate {
        gamma,
        sigma_tilde_min: sigma,
        x_hat_min_abs: x_min,
    })
}

/// `sum_i L_i^alpha ||y_(i)||^2` (the square of the weighted norm).
pub fn weighted_alpha_norm_sq<T: Scalar>(y: &[T], boundaries: &[usize], lipschitz: &[T], alpha: T) -> Result<T> {
    if boundaries.len() != lipschitz.len() + 1 || boundaries.last() != Some(&y.len()) {
        return Err(Error::DimensionMismatch {
            expected: lipschitz.len() + 1,
            got: boundaries.len(),
        });
    }
    Ok(boundaries
        .windows(2)
        .zip(lipschitz)
        .map(|(w, &l)| l.powf(alpha) * scalar::norm_sq(&y[w[0]..w[1]]))
        .sum())
}

/// Per-iteration contraction factor of plain BK in expectation,
/// `1 - 1 / (2 M gamma Lbar_alpha Lbar^(1-alpha))`.
///
/// Errors when the factor falls outside `(0, 1)`, where the bound says
/// nothing.
pub fn bk_rate_factor<T: Scalar>(blocks: usize, gamma: T, lbar_alpha: T, lbar: T, alpha: T) -> Result<T> {
    let denom = T::lit(2.0) * T::from_usize_lossy(blocks) * gamma * lbar_alpha * lbar.powf(T::one() - alpha);
    let factor = T::one() - T::one() / denom;
    if factor > T::zero() && factor < T::one() {
        Ok(factor)
    } else {
        Err(Error::invalid(format!("rate bound is vacuous (factor {factor})")))
    }
}

/// `4 M^2 / (k - 1 + 2M)^2 * C_0`, the accelerated-method bound on the
/// expected Bregman distance after `k >= 1` iterations.
pub fn arbk_rate_bound<T: Scalar>(k: usize, blocks: usize, c0: T) -> Result<T> {
    if k < 1 || blocks < 1 {
        return Err(Error::invalid("k and M must be at least 1"));
    }
    let m = T::from_usize_lossy(blocks);
    let den = T::from_usize_lossy(k - 1) + T::lit(2.0) * m;
    Ok(T::lit(4.0) * m * m / (den * den) * c0)
}

/// `C_0 = (1 - 1/M) D_0 + 1/2 ||y0 - y_hat||_B^2` with
/// `B = diag(L_1, ..., L_M)` acting blockwise.
pub fn arbk_initial_constant<T: Scalar>(partition: &BlockPartition<T>, d0: T, y0: &[T], y_hat: &[T]) -> Result<T> {
    let diff: Vec<T> = y0.iter().zip(y_hat).map(|(&a, &b)| a - b).collect();
    let b_norm = weighted_alpha_norm_sq(&diff, partition.boundaries(), partition.lipschitz_all(), T::one())?;
    let m = T::from_usize_lossy(partition.num_blocks());
    Ok((T::one() - T::one() / m) * d0 + T::lit(0.5) * b_norm)
}

/// `2 M Lbar_alpha / (k + 4) * R^2`, the plain-method sublinear bound, with
/// the level-set radius `R^2` supplied by the caller.
pub fn bk_sublinear_bound<T: Scalar>(k: usize, blocks: usize, lbar_alpha: T, r_sq: T) -> T {
    T::lit(2.0) * T::from_usize_lossy(blocks) * lbar_alpha / T::from_usize_lossy(k + 4) * r_sq
}

/// A dual solution `y_hat` with `grad f*(A^T y_hat) = x_hat`.
///
/// On the coordinates where the subdifferential of `f` at `x_hat` is a single
/// point `d_j`, solves `(A^T y)_j = d_j` in the least-norm / least-squares
/// sense through the normal equations, then checks that the result actually
/// maps back to `x_hat`. Meant for tiny instances.
pub fn dual_solution<T: Scalar>(problem: &ProblemInstance<T>, potential: &Potential<T>) -> Result<Vec<T>> {
    let x_hat = problem
        .x_hat
        .as_ref()
        .ok_or(Error::UnavailableMetric("dual solution needs a ground truth"))?;
    let a = &problem.a;
    let (m, n) = (a.rows(), a.cols());
    // determined coordinates and their dual values
    let mut cols = Vec::new();
    let mut target = Vec::new();
    match potential {
        Potential::SquaredNorm => {
            cols.extend(0..n);
            target.extend_from_slice(x_hat);
        }
        Potential::Sparse { lambda } => {
            for (j, &v) in x_hat.iter().enumerate() {
                if !v.is_zero() || lambda.is_zero() {
                    cols.push(j);
                    target.push(v + *lambda * v.signum() * T::from_usize_lossy(usize::from(!v.is_zero())));
                }
            }
        }
        Potential::GroupSparse { lambda, groups } => {
            for g in groups.groups() {
                let nrm = g.iter().fold(T::zero(), |acc, &j| acc + x_hat[j] * x_hat[j]).sqrt();
                if !nrm.is_zero() || lambda.is_zero() {
                    let scale = if nrm.is_zero() {
                        T::one()
                    } else {
                        T::one() + *lambda / nrm
                    };
                    for &j in g {
                        cols.push(j);
                        target.push(x_hat[j] * scale);
                    }
                }
            }
        }
    }
    let s = cols.len();
    let y_hat = if s == 0 {
        vec![T::zero(); m]
    } else {
        let sub = a.select_columns(&cols); // m x s, row-major
        if s >= m {
            // least squares: (A_S A_S^T) y = A_S t
            let mut gram = vec![T::zero(); m * m];
            for i in 0..m {
                for k in 0..m {
                    gram[i * m + k] = scalar::dot(&sub[i * s..(i + 1) * s], &sub[k * s..(k + 1) * s]);
                }
            }
            let rhs: Vec<T> = (0..m).map(|i| scalar::dot(&sub[i * s..(i + 1) * s], &target)).collect();
            svd::cholesky_solve(m, &gram, &rhs)?
        } else {
            // least norm: y = A_S (A_S^T A_S)^{-1} t
            let mut gram = vec![T::zero(); s * s];
            for p in 0..s {
                for q in 0..s {
                    gram[p * s + q] = (0..m).fold(T::zero(), |acc, i| acc + sub[i * s + p] * sub[i * s + q]);
                }
            }
            let w = svd::cholesky_solve(s, &gram, &target)?;
            (0..m).map(|i| scalar::dot(&sub[i * s..(i + 1) * s], &w)).collect()
        }
    };
    let back = potential.conj_grad(&a.apply_transpose(&y_hat));
    let err = scalar::dist(&back, x_hat);
    if !(err <= T::lit(1e-8) * (T::one() + scalar::norm(x_hat))) {
        return Err(Error::NumericalFailure(format!(
            "no dual solution found by normal equations (mismatch {err:e})"
        )));
    }
    Ok(y_hat)
}

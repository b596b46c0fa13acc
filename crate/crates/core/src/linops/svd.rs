//! Small dense factorizations used by the diagnostics: one-sided Jacobi
//! singular values and a Cholesky solve. Only meant for the tiny matrices
//! the brute-force oracles enumerate.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Singular values of a `rows x cols` row-major matrix, sorted descending.
///
/// Returns `min(rows, cols)` values. Uses the Hestenes one-sided Jacobi
/// iteration on the columns of whichever orientation has fewer columns,
/// which keeps small singular values accurate relative to the largest.
pub fn singular_values<T: Scalar>(rows: usize, cols: usize, data: &[T]) -> Result<Vec<T>> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            got: data.len(),
        });
    }
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    // Column-major working copy with `k` columns of length `len`.
    let (len, k, mut w) = if cols <= rows {
        let mut w = vec![T::zero(); rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                w[j * rows + i] = data[i * cols + j];
            }
        }
        (rows, cols, w)
    } else {
        (cols, rows, data.to_vec())
    };

    let eps = T::epsilon();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for t in 0..len {
                    let a = w[p * len + t];
                    let b = w[q * len + t];
                    alpha = alpha + a * a;
                    beta = beta + b * b;
                    gamma = gamma + a * b;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = T::lit(2.0);
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..len {
                    let a = w[p * len + i];
                    let b = w[q * len + i];
                    w[p * len + i] = c * a - s * b;
                    w[q * len + i] = s * a + c * b;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(
            "jacobi singular value sweep did not converge".into(),
        ));
    }
    let mut sv: Vec<T> = (0..k)
        .map(|j| crate::scalar::norm(&w[j * len..(j + 1) * len]))
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    Ok(sv)
}

/// Solves `G x = rhs` for a symmetric positive definite `n x n` matrix `G`.
pub fn cholesky_solve<T: Scalar>(n: usize, g: &[T], rhs: &[T]) -> Result<Vec<T>> {
    if g.len() != n * n || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: g.len(),
        });
    }
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() {
                    return Err(Error::NumericalFailure("matrix is not positive definite".into()));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let sv = singular_values(3, 3, &[3.0, 0.0, 0.0, 0.0, -5.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(sv, vec![5.0, 3.0, 1.0]);
    }

    #[test]
    fn rank_one_wide_matrix() {
        // [[1,2,2],[2,4,4]] = (1,2)^T (1,2,2): sigma = sqrt(5)*3
        let sv = singular_values(2, 3, &[1.0, 2.0, 2.0, 2.0, 4.0, 4.0]).unwrap();
        assert!((sv[0] - 3.0 * 5f64.sqrt()).abs() < 1e-12);
        assert!(sv[1].abs() < 1e-12);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[1,1],[0,1]]: singular values are the golden ratio and its inverse
        let sv = singular_values(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sv[0] - phi).abs() < 1e-14);
        assert!((sv[1] - 1.0 / phi).abs() < 1e-14);
    }

    #[test]
    fn cholesky_small_system() {
        let g = [4.0f64, 2.0, 2.0, 3.0];
        let x = cholesky_solve(2, &g, &[6.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!(cholesky_solve(2, &[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0]).is_err());
    }
}

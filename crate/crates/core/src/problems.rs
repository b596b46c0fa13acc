//! Problem instances `Ax = b`: synthetic Gaussian generation, the two
//! experiment metrics, and on-disk storage.
//!
//! A stored problem is a directory holding
//!
//! * `A.mtx`: MatrixMarket array file,
//! * `b.txt`: right-hand side, one value per line,
//! * `x_hat.txt`: ground truth (optional),
//! * `meta.txt`: `key=value` lines (`m`, `n`, and optionally `lambda`,
//!   `seed`, `kappa`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linops::{mtx, DenseMatrix};
use crate::potentials::Potential;
use crate::sampling::BoxMuller;
use crate::scalar::{self, Scalar};

pub const MATRIX_FILE: &str = "A.mtx";
pub const RHS_FILE: &str = "b.txt";
pub const TRUTH_FILE: &str = "x_hat.txt";
pub const META_FILE: &str = "meta.txt";

/// Relative slack allowed in `||A x_hat - b|| <= tol (1 + ||b||)`.
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T> {
    pub a: DenseMatrix<T>,
    pub b: Vec<T>,
    pub x_hat: Option<Vec<T>>,
    pub lambda_gen: Option<T>,
    pub seed: Option<u64>,
    pub kappa: Option<T>,
}

/// A residual norm, relative to `||b||` unless `b = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual<T> {
    pub value: T,
    pub relative: bool,
}

impl<T: Scalar> ProblemInstance<T> {
    /// Wraps a matrix and right-hand side, checking dimensions and, when a
    /// ground truth is given, consistency.
    pub fn new(a: DenseMatrix<T>, b: Vec<T>, x_hat: Option<Vec<T>>) -> Result<Self> {
        let p = Self {
            a,
            b,
            x_hat,
            lambda_gen: None,
            seed: None,
            kappa: None,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.b.len() != self.a.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.a.rows(),
                got: self.b.len(),
            });
        }
        if let Some(pos) = self.b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        if let Some(x) = &self.x_hat {
            if x.len() != self.a.cols() {
                return Err(Error::DimensionMismatch {
                    expected: self.a.cols(),
                    got: x.len(),
                });
            }
            let r = scalar::dist(&self.a.apply(x), &self.b);
            let bound = T::lit(CONSISTENCY_TOL) * (T::one() + scalar::norm(&self.b));
            if !(r <= bound) {
                return Err(Error::invalid(format!(
                    "ground truth is inconsistent: ||A x_hat - b|| = {r:e}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn b_norm(&self) -> T {
        scalar::norm(&self.b)
    }

    /// `||Ax - b|| / ||b||`, or the absolute residual (flagged) when `b = 0`.
    pub fn relative_residual(&self, x: &[T]) -> Residual<T> {
        let ax = self.a.apply(x);
        let r = scalar::dist(&ax, &self.b);
        let nb = self.b_norm();
        if nb.is_zero() {
            Residual {
                value: r,
                relative: false,
            }
        } else {
            Residual {
                value: r / nb,
                relative: true,
            }
        }
    }

    /// `||x - x_hat|| / ||x_hat||`.
    pub fn relative_error(&self, x: &[T]) -> Result<T> {
        let xh = self
            .x_hat
            .as_ref()
            .ok_or(Error::UnavailableMetric("relative error needs a ground truth"))?;
        let nx = scalar::norm(xh);
        if nx.is_zero() {
            return Err(Error::UnavailableMetric(
                "relative error undefined for zero ground truth",
            ));
        }
        Ok(scalar::dist(x, xh) / nx)
    }

    /// Condition number `sigma_max / sigma_min` over the `min(m, n)` singular
    /// values. Cubic cost; meant for reporting on moderate sizes.
    pub fn condition_number(&self) -> Result<T> {
        let sv = self.a.singular_values()?;
        let smin = *sv.last().expect("nonempty matrix");
        Ok(if smin.is_zero() { T::infinity() } else { sv[0] / smin })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        write(
            MATRIX_FILE,
            mtx::write_matrix_market(self.a.rows(), self.a.cols(), self.a.data()),
        )?;
        write(RHS_FILE, mtx::write_vector(&self.b))?;
        let truth = dir.join(TRUTH_FILE);
        match &self.x_hat {
            Some(x) => write(TRUTH_FILE, mtx::write_vector(x))?,
            None if truth.exists() => fs::remove_file(&truth).map_err(|e| Error::io(truth, e))?,
            None => {}
        }
        let mut meta = String::new();
        let _ = writeln!(meta, "m={}", self.rows());
        let _ = writeln!(meta, "n={}", self.cols());
        if let Some(l) = self.lambda_gen {
            let _ = writeln!(meta, "lambda={}", mtx::format_scalar(l));
        }
        if let Some(s) = self.seed {
            let _ = writeln!(meta, "seed={s}");
        }
        if let Some(k) = self.kappa {
            let _ = writeln!(meta, "kappa={}", mtx::format_scalar(k));
        }
        write(META_FILE, meta)
    }

    /// Loads a problem directory. `meta.txt` and `x_hat.txt` are optional.
    pub fn load(dir: &Path) -> Result<Self> {
        let (m, n, data) = mtx::read_matrix_market::<T>(&dir.join(MATRIX_FILE))?;
        let a = DenseMatrix::new(m, n, data)?;
        let b = mtx::read_vector(&dir.join(RHS_FILE))?;
        let truth = dir.join(TRUTH_FILE);
        let x_hat = if truth.exists() {
            Some(mtx::read_vector(&truth)?)
        } else {
            None
        };
        let mut p = Self::new(a, b, x_hat)?;
        let meta = dir.join(META_FILE);
        if meta.exists() {
            let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
            p.apply_meta(&text, &meta)?;
        }
        Ok(p)
    }

    fn apply_meta(&mut self, text: &str, path: &Path) -> Result<()> {
        for (ln, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: ln,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<T>().map_err(|_| err(format!("bad value for {key}")));
            match key {
                "m" | "n" => {
                    let v: usize = value.parse().map_err(|_| err(format!("bad value for {key}")))?;
                    let actual = if key == "m" { self.rows() } else { self.cols() };
                    if v != actual {
                        return Err(err(format!("{key}={v} disagrees with matrix ({actual})")));
                    }
                }
                "lambda" => self.lambda_gen = Some(num()?),
                "kappa" => self.kappa = Some(num()?),
                "seed" => self.seed = Some(value.parse().map_err(|_| err("bad value for seed".into()))?),
                // unknown keys are kept forward compatible
                _ => {}
            }
        }
        Ok(())
    }
}

/// Gaussian test problem with a sparse solution.
///
/// `A` has i.i.d. standard normal entries (row-major draw order), then a
/// standard normal `y` is drawn and `x_hat = S_lambda(A^T y)`, `b = A x_hat`.
/// `y` is redrawn while `x_hat` vanishes.
pub fn generate_gaussian<T: Scalar>(m: usize, n: usize, lambda: T, seed: u64) -> Result<ProblemInstance<T>> {
    if !(lambda >= T::zero() && lambda.is_finite()) {
        return Err(Error::invalid("lambda must be finite and nonnegative"));
    }
    generate_gaussian_for(m, n, &Potential::Sparse { lambda }, seed)
}

/// Same draws as [`generate_gaussian`], with `x_hat = grad f*(A^T y)` for an
/// arbitrary potential. `x_hat` is then the `f`-minimal solution of
/// `Ax = b`.
pub fn generate_gaussian_for<T: Scalar>(
    m: usize,
    n: usize,
    potential: &Potential<T>,
    seed: u64,
) -> Result<ProblemInstance<T>> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("m and n must be positive"));
    }
    let mut g = BoxMuller::new(seed);
    let mut data = vec![T::zero(); m * n];
    g.fill(&mut data);
    let a = DenseMatrix::new(m, n, data)?;
    let mut y = vec![T::zero(); m];
    let x_hat = loop {
        g.fill(&mut y);
        let x = potential.conj_grad(&a.apply_transpose(&y));
        if x.iter().any(|v| !v.is_zero()) {
            break x;
        }
    };
    let b = a.apply(&x_hat);
    Ok(ProblemInstance {
        a,
        b,
        x_hat: Some(x_hat),
        lambda_gen: Some(potential.lambda()),
        seed: Some(seed),
        kappa: None,
    })
}

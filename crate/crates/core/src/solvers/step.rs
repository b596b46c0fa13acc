//! Single iterations of the plain and accelerated Bregman–Kaczmarz methods.
//!
//! Both methods run coordinate descent on the dual objective
//! `Psi(y) = f*(A^T y) - b^T y`; the primal iterate is always recovered as
//! `x = grad f*(A^T y)`. The state carries `A^T y` and `A^T z` as caches so an
//! iteration only touches the rows of the sampled block.

use crate::linops::{BlockPartition, DenseMatrix};
use crate::potentials::Potential;
use crate::scalar::{self, Scalar};
use crate::solvers::restart::theta_next;

/// Everything an iteration reads but never modifies.
#[derive(Debug, Clone, Copy)]
pub struct Context<'a, T> {
    pub a: &'a DenseMatrix<T>,
    pub b: &'a [T],
    pub partition: &'a BlockPartition<T>,
    pub potential: &'a Potential<T>,
}

impl<'a, T: Scalar> Context<'a, T> {
    pub fn new(
        a: &'a DenseMatrix<T>,
        b: &'a [T],
        partition: &'a BlockPartition<T>,
        potential: &'a Potential<T>,
    ) -> Self {
        assert_eq!(b.len(), a.rows(), "right-hand side length");
        assert_eq!(
            *partition.boundaries().last().unwrap(),
            a.rows(),
            "partition does not cover the matrix rows"
        );
        Self {
            a,
            b,
            partition,
            potential,
        }
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    /// `Psi(y) = f*(sy) - b^T y` given the cached `sy = A^T y`.
    pub fn dual_objective_cached(&self, y: &[T], sy: &[T]) -> T {
        self.potential.conj_value(sy) - scalar::dot(self.b, y)
    }
}

/// How the interpolation parameter evolves in the accelerated step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaRule {
    /// The accelerated sequence `theta_{k+1} = theta_next(theta_k)`.
    Accelerated,
    /// `theta_k = theta_0` for all `k`, which reduces to the plain method.
    Frozen,
}

/// Dual iterates and cached transposed products.
///
/// Invariants: `sy = A^T y`, `sz = A^T z` up to accumulated round-off, which
/// [`SolverState::refresh`] clears; `theta` is nonincreasing.
#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub k: usize,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub theta: T,
    pub sy: Vec<T>,
    pub sz: Vec<T>,
    scratch: Scratch<T>,
}

#[derive(Debug, Clone)]
struct Scratch<T> {
    // primal point the residual is evaluated at
    x: Vec<T>,
    // interpolated dual product A^T v
    sv: Vec<T>,
    // A^T of the block update
    g: Vec<T>,
    // block residual / block update
    r: Vec<T>,
}

impl<T: Scalar> SolverState<T> {
    /// `y = z = 0` and `theta = 1/M`.
    pub fn zero(ctx: &Context<'_, T>) -> Self {
        let m = ctx.a.rows();
        Self::from_dual(ctx, vec![T::zero(); m])
    }

    /// `y = z = y0`, caches computed from scratch, `theta = 1/M`.
    pub fn from_dual(ctx: &Context<'_, T>, y0: Vec<T>) -> Self {
        assert_eq!(y0.len(), ctx.a.rows(), "dual start has wrong length");
        let n = ctx.a.cols();
        let sy = ctx.a.apply_transpose(&y0);
        let max_block = (0..ctx.num_blocks())
            .map(|i| ctx.partition.block_len(i))
            .max()
            .unwrap_or(0);
        Self {
            k: 0,
            z: y0.clone(),
            y: y0,
            theta: T::one() / T::from_usize_lossy(ctx.num_blocks()),
            sz: sy.clone(),
            sy,
            scratch: Scratch {
                x: vec![T::zero(); n],
                sv: vec![T::zero(); n],
                g: vec![T::zero(); n],
                r: vec![T::zero(); max_block],
            },
        }
    }

    /// Resets to `y = z = y0` with known `A^T y0` and `theta = 1/M`,
    /// keeping the iteration counter.
    pub fn restart_from(&mut self, ctx: &Context<'_, T>, y0: &[T], sy0: &[T]) {
        self.y.copy_from_slice(y0);
        self.z.copy_from_slice(y0);
        self.sy.copy_from_slice(sy0);
        self.sz.copy_from_slice(sy0);
        self.theta = T::one() / T::from_usize_lossy(ctx.num_blocks());
    }

    /// Recomputes `sy` (and `sz` when `with_z`) from the dual iterates.
    pub fn refresh(&mut self, ctx: &Context<'_, T>, with_z: bool) {
        ctx.a.apply_transpose_into(&self.y, &mut self.sy);
        if with_z {
            ctx.a.apply_transpose_into(&self.z, &mut self.sz);
        }
    }

    /// `x = grad f*(A^T y)`.
    pub fn primal(&self, ctx: &Context<'_, T>) -> Vec<T> {
        ctx.potential.conj_grad(&self.sy)
    }

    pub fn dual_objective(&self, ctx: &Context<'_, T>) -> T {
        ctx.dual_objective_cached(&self.y, &self.sy)
    }

    /// Fills `scratch.r[..len]` with `(A_(i) x - b_(i)) * scale` and returns
    /// whether any entry is nonzero.
    fn block_residual(&mut self, ctx: &Context<'_, T>, i: usize, from_sv: bool, scale: T) -> bool {
        let len = ctx.partition.block_len(i);
        let Scratch { x, sv, r, .. } = &mut self.scratch;
        let src = if from_sv { &*sv } else { &self.sy };
        ctx.potential.conj_grad_into(src, x);
        let r = &mut r[..len];
        ctx.partition.block_apply_into(ctx.a, i, x, r);
        let range = ctx.partition.range(i);
        let mut any = false;
        for (ri, &bi) in r.iter_mut().zip(&ctx.b[range]) {
            *ri = (*ri - bi) * scale;
            any |= !ri.is_zero();
        }
        any
    }
}

/// One plain Bregman–Kaczmarz step on block `i`:
/// `d <- d - A_(i)^T (A_(i) x - b_(i)) / L_i` with `x = grad f*(d)`.
///
/// Only `y` and `sy = d` move; `z` and `sz` are left untouched.
pub fn bk_step<T: Scalar>(state: &mut SolverState<T>, ctx: &Context<'_, T>, i: usize) {
    let step = -T::one() / ctx.partition.lipschitz(i);
    if state.block_residual(ctx, i, false, step) {
        let len = ctx.partition.block_len(i);
        let range = ctx.partition.range(i);
        let delta = &state.scratch.r[..len];
        for (yj, &dj) in state.y[range].iter_mut().zip(delta) {
            *yj = *yj + dj;
        }
        ctx.partition
            .block_apply_transpose_add(ctx.a, i, delta, T::one(), &mut state.sy);
    }
    state.k += 1;
}

/// One accelerated step on block `i`:
///
/// ```text
/// v     = (1 - theta) y + theta z
/// z_(i) = z_(i) - (A_(i) grad f*(A^T v) - b_(i)) / (M theta L_i)
/// y     = v + M theta (z_new - z)
/// ```
///
/// `A^T v` comes from the caches, so the step costs two block products.
pub fn arbk_step<T: Scalar>(state: &mut SolverState<T>, ctx: &Context<'_, T>, i: usize, rule: ThetaRule) {
    let theta = state.theta;
    let one_minus = T::one() - theta;
    let m_theta = T::from_usize_lossy(ctx.num_blocks()) * theta;

    for ((v, &sy), &sz) in state.scratch.sv.iter_mut().zip(&state.sy).zip(&state.sz) {
        *v = one_minus * sy + theta * sz;
    }
    let scale = -T::one() / (m_theta * ctx.partition.lipschitz(i));
    let moved = state.block_residual(ctx, i, true, scale);

    for (yj, &zj) in state.y.iter_mut().zip(&state.z) {
        *yj = one_minus * *yj + theta * zj;
    }
    if moved {
        let len = ctx.partition.block_len(i);
        let range = ctx.partition.range(i);
        let Scratch { sv, g, r, .. } = &mut state.scratch;
        let dz = &r[..len];
        for ((yj, zj), &dj) in state.y[range.clone()].iter_mut().zip(&mut state.z[range]).zip(dz) {
            *yj = *yj + m_theta * dj;
            *zj = *zj + dj;
        }
        g.iter_mut().for_each(|v| *v = T::zero());
        ctx.partition.block_apply_transpose_add(ctx.a, i, dz, T::one(), g);
        for (((syj, szj), &svj), &gj) in state.sy.iter_mut().zip(&mut state.sz).zip(&*sv).zip(&*g) {
            *syj = svj + m_theta * gj;
            *szj = *szj + gj;
        }
    } else {
        state.sy.copy_from_slice(&state.scratch.sv);
    }
    if rule == ThetaRule::Accelerated {
        state.theta = theta_next(theta);
    }
    state.k += 1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::DenseMatrix;

    fn setup(a: DenseMatrix<f64>, blocks: usize) -> (DenseMatrix<f64>, BlockPartition<f64>) {
        let p = BlockPartition::equal(&a, blocks).unwrap();
        (a, p)
    }

    #[test]
    fn single_row_step_is_projection() {
        let (a, p) = setup(DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), 2);
        let b = [3.0, -1.0];
        let f = Potential::squared_norm();
        let ctx = Context::new(&a, &b, &p, &f);
        let mut s = SolverState::zero(&ctx);
        bk_step(&mut s, &ctx, 0);
        assert_eq!(s.primal(&ctx), vec![3.0, 0.0]);
    }

    #[test]
    fn zero_block_residual_is_fixed_point() {
        let (a, p) = setup(DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap(), 2);
        let b = [0.0, 2.0];
        let f = Potential::sparse(0.5).unwrap();
        let ctx = Context::new(&a, &b, &p, &f);
        let mut s = SolverState::zero(&ctx);
        bk_step(&mut s, &ctx, 0);
        assert_eq!(s.y, vec![0.0, 0.0]);
        assert_eq!(s.sy, vec![0.0, 0.0]);
        assert_eq!(s.k, 1);
    }

    #[test]
    fn accelerated_one_by_one_hand_computation() {
        // A = (2), b = (4): z1 = 0 - (2*0 - 4)/4 = 1, y1 = 1, x1 = 2
        let (a, p) = setup(DenseMatrix::new(1, 1, vec![2.0]).unwrap(), 1);
        let b = [4.0];
        let f = Potential::squared_norm();
        let ctx = Context::new(&a, &b, &p, &f);
        let mut s = SolverState::zero(&ctx);
        assert_eq!(s.theta, 1.0);
        arbk_step(&mut s, &ctx, 0, ThetaRule::Accelerated);
        assert_eq!(s.z, vec![1.0]);
        assert_eq!(s.y, vec![1.0]);
        assert_eq!(s.primal(&ctx), vec![2.0]);
        assert!((s.theta - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs_stays_at_zero() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]]).unwrap();
        let (a, p) = setup(a, 3);
        let b = [0.0; 3];
        let f = Potential::sparse(1.0).unwrap();
        let ctx = Context::new(&a, &b, &p, &f);
        let mut s = SolverState::zero(&ctx);
        for k in 0..50 {
            arbk_step(&mut s, &ctx, k % 3, ThetaRule::Accelerated);
        }
        assert!(s.y.iter().chain(&s.z).chain(&s.sy).all(|v| *v == 0.0));
    }

    #[test]
    fn caches_track_dual_iterates() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![3.0, -1.0, 1.0],
            vec![0.5, 0.5, -2.0],
            vec![1.5, 0.0, 1.0],
        ])
        .unwrap();
        let (a, p) = setup(a, 2);
        let b = a.apply(&[1.0, 0.0, -2.0]);
        let f = Potential::sparse(0.3).unwrap();
        let ctx = Context::new(&a, &b, &p, &f);
        let mut s = SolverState::zero(&ctx);
        for k in 0..200 {
            arbk_step(&mut s, &ctx, (k * 7) % 2, ThetaRule::Accelerated);
        }
        let sy = a.apply_transpose(&s.y);
        let sz = a.apply_transpose(&s.z);
        let scale = 1.0 + crate::scalar::norm(&sy).max(crate::scalar::norm(&sz));
        assert!(crate::scalar::dist(&sy, &s.sy) <= 1e-10 * scale);
        assert!(crate::scalar::dist(&sz, &s.sz) <= 1e-10 * scale);
    }
}

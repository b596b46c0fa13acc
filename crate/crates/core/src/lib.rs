//! Block Kaczmarz methods for linearly constrained problems
//! `min f(x) s.t. Ax = b` with a strongly convex `f`.
//!
//! The solvers run randomized block coordinate descent on the dual
//! `Psi(y) = f*(A^T y) - b^T y` and report the primal iterate
//! `x = grad f*(A^T y)`:
//!
//! * [`solvers::run_bk`]: plain randomized block Bregman-Kaczmarz,
//! * [`solvers::run_arbk`]: its accelerated variant,
//! * [`solvers::rarbk_run`]: the accelerated variant with restarts.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below fix the common case.

// `!(x <= bound)` is how NaN inputs are rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linops;
pub mod potentials;
pub mod problems;
pub mod sampling;
pub mod scalar;
pub mod solvers;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
pub use linops::{BlockPartition, DenseMatrix};
pub use potentials::{CoordinateGroups, Potential};
pub use problems::{generate_gaussian, ProblemInstance};
pub use sampling::BlockSampler;
pub use scalar::Scalar;
pub use solvers::{Method, RestartSchedule, RunConfig, RunOutput, TraceRecord};

pub type DenseMatrixF64 = DenseMatrix<f64>;
pub type BlockPartitionF64 = BlockPartition<f64>;
pub type PotentialF64 = Potential<f64>;
pub type ProblemF64 = ProblemInstance<f64>;
pub type RunConfigF64 = RunConfig<f64>;
pub type RunOutputF64 = RunOutput<f64>;
pub type TraceRecordF64 = TraceRecord<f64>;

pub type DenseMatrixF32 = DenseMatrix<f32>;
pub type ProblemF32 = ProblemInstance<f32>;

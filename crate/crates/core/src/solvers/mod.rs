//! Randomized block Bregman–Kaczmarz solvers.
//!
//! * [`Method::Bk`]: randomized block coordinate descent on the dual,
//!   read in the primal as a Bregman–Kaczmarz sweep.
//! * [`Method::Arbk`]: the accelerated (APPROX-type) variant.
//! * [`Method::Rarbk`]: the accelerated variant restarted after each period
//!   of a [`RestartSchedule`], keeping a restart only when it did not increase
//!   the dual objective.
//!
//! All runs start from `y = 0` (equivalently `x = grad f*(0)`). One epoch is
//! `M` block iterations; metrics are evaluated at epoch boundaries only.

mod restart;
mod step;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use restart::{doubling_period, period_for_zeta, restart_period_kstar, theta_next, RestartSchedule};
pub use step::{arbk_step, bk_step, Context, SolverState, ThetaRule};

use crate::error::{Error, Result};
use crate::linops::BlockPartition;
use crate::potentials::Potential;
use crate::problems::ProblemInstance;
use crate::sampling::BlockSampler;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Bk,
    Arbk,
    Rarbk,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bk, Method::Arbk, Method::Rarbk];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bk => "BK",
            Method::Arbk => "ARBK",
            Method::Rarbk => "RARBK",
        }
    }

    /// Uniform sampling for the accelerated methods (their rate guarantee is
    /// stated for it), Lipschitz-proportional sampling for plain BK.
    pub fn default_alpha(&self) -> f64 {
        match self {
            Method::Bk => 1.0,
            Method::Arbk | Method::Rarbk => 0.0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bk" => Ok(Method::Bk),
            "arbk" => Ok(Method::Arbk),
            "rarbk" => Ok(Method::Rarbk),
            _ => Err(Error::invalid(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub method: Method,
    /// Number of row blocks `M`.
    pub blocks: usize,
    /// Sampling exponent in `p_i ∝ L_i^alpha`.
    pub alpha: T,
    pub seed: u64,
    /// Stop once the relative residual or relative error is `<= tol`.
    /// `None` always runs the full epoch budget.
    pub tol: Option<T>,
    pub max_epochs: usize,
    /// Epochs between trace rows. The first and last epochs are always traced.
    pub eval_every: usize,
    /// Required for [`Method::Rarbk`], ignored otherwise.
    pub schedule: Option<RestartSchedule>,
}

impl<T: Scalar> RunConfig<T> {
    /// Defaults: method-specific alpha, seed 0, tol 1e-6, 1000 epochs,
    /// a trace row every epoch, and for RARBK a fixed period of `165 M`.
    pub fn new(method: Method, blocks: usize) -> Self {
        Self {
            method,
            blocks,
            alpha: T::lit(method.default_alpha()),
            seed: 0,
            tol: Some(T::lit(1e-6)),
            max_epochs: 1000,
            eval_every: 1,
            schedule: (method == Method::Rarbk).then(|| RestartSchedule::Fixed(165 * blocks.max(1))),
        }
    }

    /// Sets the tolerance; an infinite tolerance disables early stopping.
    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol.is_finite().then_some(tol);
        self
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.method, self.blocks)
    }

    fn validate(&self, rows: usize) -> Result<()> {
        if self.blocks < 1 || self.blocks > rows {
            return Err(Error::InvalidPartition {
                rows,
                blocks: self.blocks,
            });
        }
        if let Some(t) = self.tol {
            if !(t > T::zero()) {
                return Err(Error::invalid(format!("tol must be positive, got {t}")));
            }
        }
        if self.eval_every == 0 {
            return Err(Error::invalid("eval_every must be at least 1"));
        }
        if self.method == Method::Rarbk && self.schedule.is_none() {
            return Err(Error::invalid("RARBK needs a restart schedule"));
        }
        Ok(())
    }
}

/// Metrics of one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub method: String,
    pub epoch: usize,
    pub rel_residual: T,
    pub rel_error: Option<T>,
    pub dual_objective: T,
    pub bregman_to_xhat: Option<T>,
    pub restarts_accepted: usize,
    pub restarts_rejected: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub label: String,
    pub method: Method,
    /// Primal solution estimate.
    pub x: Vec<T>,
    /// Dual point `x` was recovered from.
    pub y: Vec<T>,
    pub trace: Vec<TraceRecord<T>>,
    pub iterations: usize,
    pub epochs: usize,
    pub converged: bool,
    /// First epoch at which the tolerance was met.
    pub epochs_to_tol: Option<usize>,
    pub restarts_accepted: usize,
    pub restarts_rejected: usize,
    /// Dual objective of the accepted restart point after each period
    /// (RARBK only), starting with the initial point.
    pub restart_objectives: Vec<T>,
    /// Time spent iterating, excluding trace-only metric evaluation.
    pub wall: Duration,
}

/// Shared driver state for one method.
trait Engine<T: Scalar> {
    fn step(&mut self, ctx: &Context<'_, T>, block: usize);
    fn end_epoch(&mut self, ctx: &Context<'_, T>);
    /// Current dual point and its cached `A^T y`.
    fn current(&self) -> (&[T], &[T]);
    fn restarts(&self) -> (usize, usize) {
        (0, 0)
    }
    /// Final dual point; `met_tol` is whether the current point met the
    /// tolerance.
    fn finish(&mut self, ctx: &Context<'_, T>, met_tol: bool) -> (Vec<T>, Vec<T>);
    fn restart_objectives(&self) -> Vec<T> {
        Vec::new()
    }
}

struct Bk<T> {
    state: SolverState<T>,
}

impl<T: Scalar> Engine<T> for Bk<T> {
    fn step(&mut self, ctx: &Context<'_, T>, block: usize) {
        bk_step(&mut self.state, ctx, block);
    }
    fn end_epoch(&mut self, ctx: &Context<'_, T>) {
        self.state.refresh(ctx, false);
    }
    fn current(&self) -> (&[T], &[T]) {
        (&self.state.y, &self.state.sy)
    }
    fn finish(&mut self, _: &Context<'_, T>, _: bool) -> (Vec<T>, Vec<T>) {
        (self.state.y.clone(), self.state.sy.clone())
    }
}

struct Arbk<T> {
    state: SolverState<T>,
    rule: ThetaRule,
}

impl<T: Scalar> Engine<T> for Arbk<T> {
    fn step(&mut self, ctx: &Context<'_, T>, block: usize) {
        arbk_step(&mut self.state, ctx, block, self.rule);
    }
    fn end_epoch(&mut self, ctx: &Context<'_, T>) {
        self.state.refresh(ctx, true);
    }
    fn current(&self) -> (&[T], &[T]) {
        (&self.state.y, &self.state.sy)
    }
    fn finish(&mut self, _: &Context<'_, T>, _: bool) -> (Vec<T>, Vec<T>) {
        (self.state.y.clone(), self.state.sy.clone())
    }
}

/// Accelerated iterations restarted from the best accepted dual point.
struct Rarbk<T> {
    inner: SolverState<T>,
    schedule: RestartSchedule,
    period: usize,
    period_len: usize,
    steps_in_period: usize,
    anchor_y: Vec<T>,
    anchor_sy: Vec<T>,
    anchor_psi: T,
    accepted: usize,
    rejected: usize,
    history: Vec<T>,
}

impl<T: Scalar> Rarbk<T> {
    fn new(ctx: &Context<'_, T>, schedule: RestartSchedule) -> Self {
        let inner = SolverState::zero(ctx);
        let anchor_psi = inner.dual_objective(ctx);
        Self {
            anchor_y: inner.y.clone(),
            anchor_sy: inner.sy.clone(),
            inner,
            period: 0,
            period_len: schedule.period(0),
            schedule,
            steps_in_period: 0,
            anchor_psi,
            accepted: 0,
            rejected: 0,
            history: vec![anchor_psi],
        }
    }

    /// Conditional acceptance of the current inner iterate. Returns whether it
    /// was accepted.
    fn consider_candidate(&mut self, ctx: &Context<'_, T>) -> bool {
        self.inner.refresh(ctx, true);
        let psi = self.inner.dual_objective(ctx);
        let accept = psi <= self.anchor_psi;
        if accept {
            self.anchor_y.copy_from_slice(&self.inner.y);
            self.anchor_sy.copy_from_slice(&self.inner.sy);
            self.anchor_psi = psi;
            self.accepted += 1;
        } else {
            self.rejected += 1;
        }
        self.history.push(self.anchor_psi);
        accept
    }

    fn end_period(&mut self, ctx: &Context<'_, T>) {
        self.consider_candidate(ctx);
        self.inner.restart_from(ctx, &self.anchor_y, &self.anchor_sy);
        self.period += 1;
        self.period_len = self.schedule.period(self.period);
        self.steps_in_period = 0;
    }
}

impl<T: Scalar> Engine<T> for Rarbk<T> {
    fn step(&mut self, ctx: &Context<'_, T>, block: usize) {
        arbk_step(&mut self.inner, ctx, block, ThetaRule::Accelerated);
        self.steps_in_period += 1;
        if self.steps_in_period == self.period_len {
            self.end_period(ctx);
        }
    }
    fn end_epoch(&mut self, ctx: &Context<'_, T>) {
        self.inner.refresh(ctx, true);
    }
    fn current(&self) -> (&[T], &[T]) {
        (&self.inner.y, &self.inner.sy)
    }
    fn restarts(&self) -> (usize, usize) {
        (self.accepted, self.rejected)
    }
    fn finish(&mut self, ctx: &Context<'_, T>, met_tol: bool) -> (Vec<T>, Vec<T>) {
        // the last, possibly truncated, period gets the same conditional
        // acceptance as a complete one
        if self.steps_in_period > 0 {
            self.consider_candidate(ctx);
        }
        if met_tol {
            (self.inner.y.clone(), self.inner.sy.clone())
        } else {
            (self.anchor_y.clone(), self.anchor_sy.clone())
        }
    }
    fn restart_objectives(&self) -> Vec<T> {
        self.history.clone()
    }
}

struct Metrics<T> {
    rel_residual: T,
    rel_error: Option<T>,
    x: Vec<T>,
}

fn stop_metrics<T: Scalar>(problem: &ProblemInstance<T>, potential: &Potential<T>, sy: &[T]) -> Metrics<T> {
    let x = potential.conj_grad(sy);
    let rel_residual = problem.relative_residual(&x).value;
    let rel_error = problem.relative_error(&x).ok();
    Metrics {
        rel_residual,
        rel_error,
        x,
    }
}

fn meets<T: Scalar>(m: &Metrics<T>, tol: Option<T>) -> bool {
    match tol {
        Some(t) => m.rel_residual <= t || m.rel_error.is_some_and(|e| e <= t),
        None => false,
    }
}

/// Runs the configured method on `problem` from the zero dual start.
pub fn run<T: Scalar>(
    config: &RunConfig<T>,
    problem: &ProblemInstance<T>,
    potential: &Potential<T>,
) -> Result<RunOutput<T>> {
    config.validate(problem.rows())?;
    let partition = BlockPartition::equal(&problem.a, config.blocks)?;
    let ctx = Context::new(&problem.a, &problem.b, &partition, potential);
    match config.method {
        Method::Bk => {
            let engine = Bk {
                state: SolverState::zero(&ctx),
            };
            drive(config, problem, &ctx, engine)
        }
        Method::Arbk => {
            let engine = Arbk {
                state: SolverState::zero(&ctx),
                rule: ThetaRule::Accelerated,
            };
            drive(config, problem, &ctx, engine)
        }
        Method::Rarbk => {
            let schedule = config.schedule.expect("validated");
            drive(config, problem, &ctx, Rarbk::new(&ctx, schedule))
        }
    }
}

pub fn run_bk<T: Scalar>(
    config: &RunConfig<T>,
    problem: &ProblemInstance<T>,
    potential: &Potential<T>,
) -> Result<RunOutput<T>> {
    run(
        &RunConfig {
            method: Method::Bk,
            ..config.clone()
        },
        problem,
        potential,
    )
}

pub fn run_arbk<T: Scalar>(
    config: &RunConfig<T>,
    problem: &ProblemInstance<T>,
    potential: &Potential<T>,
) -> Result<RunOutput<T>> {
    run(
        &RunConfig {
            method: Method::Arbk,
            ..config.clone()
        },
        problem,
        potential,
    )
}

pub fn rarbk_run<T: Scalar>(
    config: &RunConfig<T>,
    problem: &ProblemInstance<T>,
    potential: &Potential<T>,
) -> Result<RunOutput<T>> {
    run(
        &RunConfig {
            method: Method::Rarbk,
            ..config.clone()
        },
        problem,
        potential,
    )
}

fn drive<T: Scalar, E: Engine<T>>(
    config: &RunConfig<T>,
    problem: &ProblemInstance<T>,
    ctx: &Context<'_, T>,
    mut engine: E,
) -> Result<RunOutput<T>> {
    let potential = ctx.potential;
    let mut sampler = BlockSampler::new(ctx.partition.lipschitz_all(), config.alpha, config.seed)?;
    let label = config.label();
    let mut trace = Vec::new();
    let mut wall = Duration::ZERO;

    let record = |engine: &E, epoch: usize, metrics: &Metrics<T>, wall: Duration| {
        let (y, sy) = engine.current();
        let (acc, rej) = engine.restarts();
        TraceRecord {
            method: label.clone(),
            epoch,
            rel_residual: metrics.rel_residual,
            rel_error: metrics.rel_error,
            dual_objective: ctx.dual_objective_cached(y, sy),
            bregman_to_xhat: problem.x_hat.as_ref().map(|xh| potential.bregman_distance(sy, xh)),
            restarts_accepted: acc,
            restarts_rejected: rej,
            wall_ms: u64::try_from(wall.as_millis()).unwrap_or(u64::MAX),
        }
    };

    let t0 = Instant::now();
    let mut metrics = stop_metrics(problem, potential, engine.current().1);
    let mut met = meets(&metrics, config.tol);
    wall += t0.elapsed();
    trace.push(record(&engine, 0, &metrics, wall));

    let blocks = ctx.num_blocks();
    let mut epoch = 0;
    while !met && epoch < config.max_epochs {
        let t = Instant::now();
        for _ in 0..blocks {
            let i = sampler.sample();
            engine.step(ctx, i);
        }
        engine.end_epoch(ctx);
        epoch += 1;
        metrics = stop_metrics(problem, potential, engine.current().1);
        met = meets(&metrics, config.tol);
        wall += t.elapsed();
        if met || epoch % config.eval_every == 0 || epoch == config.max_epochs {
            trace.push(record(&engine, epoch, &metrics, wall));
        }
    }

    let t = Instant::now();
    let (y, sy) = engine.finish(ctx, met);
    wall += t.elapsed();
    let x = if met { metrics.x } else { potential.conj_grad(&sy) };
    let (restarts_accepted, restarts_rejected) = engine.restarts();
    if let Some(last) = trace.last_mut() {
        last.restarts_accepted = restarts_accepted;
        last.restarts_rejected = restarts_rejected;
    }
    Ok(RunOutput {
        label,
        method: config.method,
        x,
        y,
        trace,
        iterations: epoch * blocks,
        epochs: epoch,
        converged: met,
        epochs_to_tol: met.then_some(epoch),
        restarts_accepted,
        restarts_rejected,
        restart_objectives: engine.restart_objectives(),
        wall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::DenseMatrix;
    use crate::problems::generate_gaussian;

    #[test]
    fn method_parsing() {
        assert_eq!("arbk".parse::<Method>().unwrap(), Method::Arbk);
        assert_eq!("RARBK".parse::<Method>().unwrap(), Method::Rarbk);
        assert!("nrbk".parse::<Method>().is_err());
    }

    #[test]
    fn infinite_tol_runs_full_budget() {
        let p = generate_gaussian::<f64>(8, 12, 0.5, 1).unwrap();
        let f = Potential::sparse(0.5).unwrap();
        for method in Method::ALL {
            let mut cfg = RunConfig::new(method, 4).with_tol(f64::INFINITY);
            cfg.max_epochs = 7;
            let out = run(&cfg, &p, &f).unwrap();
            assert_eq!(out.iterations, 28);
            assert_eq!(out.epochs, 7);
            assert!(!out.converged);
            assert_eq!(out.trace.len(), 8);
        }
    }

    #[test]
    fn zero_problem_stops_at_epoch_zero() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 1.0]]).unwrap();
        let p = ProblemInstance::new(a, vec![0.0, 0.0], Some(vec![0.0, 0.0])).unwrap();
        let f = Potential::sparse(1.0).unwrap();
        let out = run(&RunConfig::new(Method::Arbk, 2), &p, &f).unwrap();
        assert!(out.converged);
        assert_eq!(out.epochs_to_tol, Some(0));
        assert_eq!(out.x, vec![0.0, 0.0]);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn zero_budget_gives_single_row() {
        let p = generate_gaussian::<f64>(4, 6, 0.5, 2).unwrap();
        let f = Potential::sparse(0.5).unwrap();
        let mut cfg = RunConfig::new(Method::Bk, 2);
        cfg.max_epochs = 0;
        let out = run(&cfg, &p, &f).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace[0].epoch, 0);
        assert!((out.trace[0].rel_residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let p = generate_gaussian::<f64>(4, 6, 0.5, 2).unwrap();
        let f = Potential::sparse(0.5).unwrap();
        assert!(run(&RunConfig::new(Method::Bk, 5), &p, &f).is_err());
        assert!(run(&RunConfig::new(Method::Bk, 0), &p, &f).is_err());
        let mut cfg = RunConfig::new(Method::Rarbk, 2);
        cfg.schedule = None;
        assert!(run(&cfg, &p, &f).is_err());
        let mut cfg = RunConfig::new(Method::Arbk, 2);
        cfg.tol = Some(0.0);
        assert!(run(&cfg, &p, &f).is_err());
        let mut cfg = RunConfig::new(Method::Arbk, 2);
        cfg.alpha = 2.0;
        assert!(run(&cfg, &p, &f).is_err());
    }

    #[test]
    fn eval_every_thins_trace() {
        let p = generate_gaussian::<f64>(6, 10, 0.5, 3).unwrap();
        let f = Potential::sparse(0.5).unwrap();
        let mut cfg = RunConfig::new(Method::Arbk, 3).with_tol(f64::INFINITY);
        cfg.max_epochs = 10;
        cfg.eval_every = 4;
        let out = run(&cfg, &p, &f).unwrap();
        let epochs: Vec<_> = out.trace.iter().map(|r| r.epoch).collect();
        assert_eq!(epochs, vec![0, 4, 8, 10]);
    }

    #[test]
    fn solvers_converge_on_small_problem() {
        let p = generate_gaussian::<f64>(20, 40, 1.0, 9).unwrap();
        let f = Potential::sparse(1.0).unwrap();
        for method in Method::ALL {
            let mut cfg = RunConfig::new(method, 5);
            cfg.max_epochs = 20_000;
            cfg.schedule = Some(RestartSchedule::Fixed(50));
            let out = run(&cfg, &p, &f).unwrap();
            assert!(out.converged, "{method} did not converge");
            let rr = p.relative_residual(&out.x).value;
            let re = p.relative_error(&out.x).unwrap();
            assert!(rr <= 1e-6 || re <= 1e-6, "{method}: {rr} {re}");
        }
    }

    #[test]
    fn rarbk_restart_objectives_nonincreasing() {
        let p = generate_gaussian::<f64>(15, 30, 1.0, 4).unwrap();
        let f = Potential::sparse(1.0).unwrap();
        let mut cfg = RunConfig::new(Method::Rarbk, 5).with_tol(f64::INFINITY);
        cfg.max_epochs = 300;
        cfg.schedule = Some(RestartSchedule::Doubling(7));
        let out = run(&cfg, &p, &f).unwrap();
        assert!(out.restart_objectives.len() > 10);
        assert!(out.restart_objectives.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(
            out.restarts_accepted + out.restarts_rejected + 1,
            out.restart_objectives.len()
        );
    }
}

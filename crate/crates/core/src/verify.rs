//! Randomized verification suites for the identities and bounds the solvers
//! rely on. Each suite returns a report; nothing here panics on a failed
//! check.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linops::BlockPartition;
use crate::potentials::{CoordinateGroups, Potential};
use crate::problems::{generate_gaussian, generate_gaussian_for, ProblemInstance};
use crate::sampling::{rng_from_seed, BlockSampler, BoxMuller, SeededRng};
use crate::scalar;
use crate::solvers::{
    arbk_step, bk_step, period_for_zeta, rarbk_run, theta_next, Context, Method, RestartSchedule, RunConfig,
    SolverState, ThetaRule,
};
use crate::theory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Fenchel,
    Lemma1,
    Theta,
    Equivalence,
    PlBound,
    Rates,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Fenchel,
        Suite::Lemma1,
        Suite::Theta,
        Suite::Equivalence,
        Suite::PlBound,
        Suite::Rates,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Fenchel => "fenchel",
            Suite::Lemma1 => "lemma1",
            Suite::Theta => "theta",
            Suite::Equivalence => "equivalence",
            Suite::PlBound => "pl-bound",
            Suite::Rates => "rates",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(Suite::as_str).collect();
                Error::invalid(format!("unknown suite '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Column count of the brute-force instances (at most 10).
    pub n: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, n: 8 }
    }
}

/// Outcome of one check inside a suite.
///
/// `worst` is the largest observed error divided by its allowance, so a
/// check passes iff `violations == 0`, equivalently `worst <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    pub worst: f64,
    pub note: String,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

/// Accumulates `err <= allowed` comparisons.
struct Tally {
    name: String,
    samples: usize,
    violations: usize,
    worst: f64,
    note: String,
}

impl Tally {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            violations: 0,
            worst: 0.0,
            note: String::new(),
        }
    }

    fn check(&mut self, err: f64, allowed: f64) {
        self.samples += 1;
        let ratio = if err <= 0.0 {
            0.0
        } else if allowed > 0.0 {
            err / allowed
        } else {
            f64::INFINITY
        };
        if !(err <= allowed) {
            self.violations += 1;
        }
        if ratio > self.worst || ratio.is_nan() {
            self.worst = ratio;
        }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn done(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            samples: self.samples,
            violations: self.violations,
            worst: self.worst,
            note: self.note,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Fenchel => fenchel_suite(opts)?,
        Suite::Lemma1 => lemma1_suite(opts)?,
        Suite::Theta => theta_suite(),
        Suite::Equivalence => equivalence_suite(opts)?,
        Suite::PlBound => pl_bound_suite(opts)?,
        Suite::Rates => rates_suite(opts)?,
    };
    Ok(SuiteReport { suite, checks })
}

fn normals(g: &mut BoxMuller, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * g.next_normal()).collect()
}

fn log_uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    10f64.powf(lo + (hi - lo) * rng.gen::<f64>())
}

/// The three shipped potentials on `n` coordinates (`n` divisible by 3).
pub fn sample_potentials(n: usize, lambda: f64) -> Result<Vec<Potential<f64>>> {
    Ok(vec![
        Potential::squared_norm(),
        Potential::sparse(lambda)?,
        Potential::group_sparse(lambda, CoordinateGroups::contiguous(n, 3)?)?,
    ])
}

/// Whether `f*` is differentiable with margin `eps` at `d` in coordinate
/// `j`, i.e. `d_j` (or its group) is not within `eps` of a kink.
fn smooth_at(p: &Potential<f64>, d: &[f64], j: usize, eps: f64) -> bool {
    match p {
        Potential::SquaredNorm => true,
        Potential::Sparse { lambda } => (d[j].abs() - lambda).abs() > eps,
        Potential::GroupSparse { lambda, groups } => {
            let g = groups
                .groups()
                .iter()
                .find(|g| g.contains(&j))
                .expect("groups cover all coordinates");
            let nrm = g.iter().map(|&k| d[k] * d[k]).sum::<f64>().sqrt();
            (nrm - lambda).abs() > eps
        }
    }
}

fn fenchel_suite(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    const POINTS: usize = 1000;
    const N: usize = 12;
    const H: f64 = 1e-5;
    let mut out = Vec::new();
    for (idx, p) in sample_potentials(N, 0.9)?.into_iter().enumerate() {
        let mut g = BoxMuller::new(opts.seed ^ (0xFE00 + idx as u64));
        let mut fenchel = Tally::new(format!("fenchel equality [{}]", p.name()));
        let mut lipschitz = Tally::new(format!("1-Lipschitz conjugate gradient [{}]", p.name()));
        let mut strong = Tally::new(format!("strong convexity bound [{}]", p.name()));
        let mut nonneg = Tally::new(format!("nonnegative distance [{}]", p.name()));
        let mut fd = Tally::new(format!("finite differences [{}]", p.name()));
        for _ in 0..POINTS {
            let d = normals(&mut g, N, 2.0);
            let d2 = normals(&mut g, N, 2.0);
            let y = normals(&mut g, N, 2.0);
            let x = p.conj_grad(&d);

            let inner = scalar::dot(&x, &d);
            fenchel.check(
                (p.f_value(&x) + p.conj_value(&d) - inner).abs(),
                1e-10 * (1.0 + inner.abs()),
            );

            let gap = scalar::dist(&x, &p.conj_grad(&d2)) - scalar::dist(&d, &d2);
            lipschitz.check(gap, 1e-12 * (1.0 + scalar::dist(&d, &d2)));

            let e = p.bregman(&d, &y);
            let lower = 0.5 * scalar::dist(&x, &y).powi(2);
            strong.check(lower - e.distance, 1e-12 * (1.0 + e.f_value.abs() + e.conj_value.abs()));
            nonneg.check(-e.distance, 0.0);

            for j in 0..N {
                if !smooth_at(&p, &d, j, 1e-3) {
                    continue;
                }
                let mut dp = d.clone();
                let mut dm = d.clone();
                dp[j] += H;
                dm[j] -= H;
                let approx = (p.conj_value(&dp) - p.conj_value(&dm)) / (2.0 * H);
                fd.check((approx - x[j]).abs(), 1e-6);
            }
        }
        out.extend([fenchel, lipschitz, strong, nonneg, fd].map(Tally::done));
    }
    Ok(out)
}

fn lemma1_suite(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    const PAIRS: usize = 50;
    let (m, n) = (20, 30);
    let potentials = sample_potentials(n, 2.0)?;
    let mut rng = rng_from_seed(opts.seed ^ 0x1E11);
    let mut g = BoxMuller::new(opts.seed ^ 0x1E12);
    let mut t = Tally::new("Bregman distance equals dual suboptimality");
    for i in 0..PAIRS {
        let p = &potentials[i % potentials.len()];
        let problem = generate_gaussian_for(m, n, p, opts.seed.wrapping_add(i as u64))?;
        let x_hat = problem.x_hat.clone().expect("generated");
        let scale = log_uniform(&mut rng, -1.0, 1.0);
        let y = normals(&mut g, m, scale);
        let (bregman, gap) = theory::duality_gap_identity(&problem, p, &y, &x_hat);
        t.check((bregman - gap).abs(), 1e-10 * (1.0 + gap.abs()));
    }
    Ok(vec![t.note(format!("{m}x{n} instances, all three potentials")).done()])
}

/// Recursion identity, the two-sided bound and strict decrease of the
/// interpolation sequence.
pub fn theta_suite() -> Vec<CheckOutcome> {
    const STEPS: usize = 100_000;
    let mut out = Vec::new();
    for theta0 in [1.0, 0.5, 1.0 / 125.0] {
        let mut identity = Tally::new(format!("recursion identity [theta0={theta0}]"));
        let mut bounds = Tally::new(format!("two-sided bound [theta0={theta0}]"));
        let mut decrease = Tally::new(format!("strict decrease [theta0={theta0}]"));
        let c = (2.0 - theta0) / theta0;
        let mut theta: f64 = theta0;
        for k in 0..=STEPS {
            let kf = k as f64;
            let lo = (2.0 - theta0) / (kf + c);
            let hi = 2.0 / (kf + 2.0 / theta0);
            bounds.check(lo - theta, 1e-12 * theta);
            bounds.check(theta - hi, 1e-12 * theta);
            if k == STEPS {
                break;
            }
            let next = theta_next(theta);
            let lhs = (1.0 - next) / (next * next);
            let rhs = 1.0 / (theta * theta);
            identity.check((lhs - rhs).abs(), 1e-12 * rhs);
            decrease.check(if next < theta { 0.0 } else { 1.0 }, 0.0);
            theta = next;
        }
        out.extend([identity, bounds, decrease].map(Tally::done));
    }
    out
}

/// Plain steps against accelerated steps with the interpolation weight held
/// at `1/M`, sharing one block sequence.
pub fn frozen_equivalence(
    problem: &ProblemInstance<f64>,
    potential: &Potential<f64>,
    blocks: usize,
    iterations: usize,
    seed: u64,
) -> Result<CheckOutcome> {
    let partition = BlockPartition::equal(&problem.a, blocks)?;
    let ctx = Context::new(&problem.a, &problem.b, &partition, potential);
    let mut sampler = BlockSampler::new(partition.lipschitz_all(), 1.0, seed)?;
    let mut bk = SolverState::zero(&ctx);
    let mut frozen = SolverState::zero(&ctx);
    let mut t = Tally::new(format!("plain equals frozen accelerated [{}]", potential.name()));
    for _ in 0..iterations {
        let i = sampler.sample();
        bk_step(&mut bk, &ctx, i);
        arbk_step(&mut frozen, &ctx, i, ThetaRule::Frozen);
        let xa = bk.primal(&ctx);
        let xb = frozen.primal(&ctx);
        let scale = xa.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let diff = xa.iter().zip(&xb).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        t.check(diff, 1e-12 * scale);
    }
    Ok(t.done())
}

/// Dual objective never increases along plain steps (caches refreshed once
/// per epoch, as in the solver).
pub fn bk_monotone_descent(
    problem: &ProblemInstance<f64>,
    potential: &Potential<f64>,
    blocks: usize,
    iterations: usize,
    seed: u64,
) -> Result<CheckOutcome> {
    let partition = BlockPartition::equal(&problem.a, blocks)?;
    let ctx = Context::new(&problem.a, &problem.b, &partition, potential);
    let mut sampler = BlockSampler::new(partition.lipschitz_all(), 1.0, seed)?;
    let mut state = SolverState::zero(&ctx);
    let mut psi = state.dual_objective(&ctx);
    let mut t = Tally::new("monotone dual descent");
    for k in 1..=iterations {
        bk_step(&mut state, &ctx, sampler.sample());
        if k % blocks == 0 {
            state.refresh(&ctx, false);
        }
        let next = state.dual_objective(&ctx);
        t.check(next - psi, 1e-10 * (1.0 + psi.abs()));
        psi = next;
    }
    Ok(t.done())
}

/// Single-row steps with the squared norm land exactly on the sampled
/// hyperplane.
pub fn exact_projection(problem: &ProblemInstance<f64>, iterations: usize, seed: u64) -> Result<CheckOutcome> {
    let potential = Potential::squared_norm();
    let m = problem.rows();
    let partition = BlockPartition::equal(&problem.a, m)?;
    let ctx = Context::new(&problem.a, &problem.b, &partition, &potential);
    let mut sampler = BlockSampler::new(partition.lipschitz_all(), 1.0, seed)?;
    let mut state = SolverState::zero(&ctx);
    let b_inf = problem.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut t = Tally::new("exact row projection");
    for _ in 0..iterations {
        let i = sampler.sample();
        bk_step(&mut state, &ctx, i);
        let x = state.primal(&ctx);
        let r = scalar::dot(problem.a.row(i), &x) - problem.b[i];
        t.check(r.abs(), 1e-12 * b_inf);
    }
    Ok(t.done())
}

fn equivalence_suite(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let (m, n) = (40, 60);
    let mut out = Vec::new();
    for (idx, p) in sample_potentials(n, 2.0)?.into_iter().enumerate() {
        let problem = generate_gaussian_for(m, n, &p, opts.seed.wrapping_add(idx as u64))?;
        out.push(frozen_equivalence(&problem, &p, 8, 10_000, opts.seed)?);
    }
    let sparse = Potential::sparse(2.0)?;
    let mut descent = Tally::new("monotone dual descent");
    for s in 0..5 {
        let problem = generate_gaussian(m, n, 2.0, opts.seed.wrapping_add(100 + s))?;
        let c = bk_monotone_descent(&problem, &sparse, 8, 20_000, opts.seed.wrapping_add(s))?;
        descent.samples += c.samples;
        descent.violations += c.violations;
        descent.worst = descent.worst.max(c.worst);
    }
    out.push(descent.done());
    let problem = generate_gaussian(50, 80, 0.0, opts.seed.wrapping_add(200))?;
    out.push(exact_projection(&problem, 10_000, opts.seed)?);
    Ok(out)
}

/// A generated sparse instance small enough for subset enumeration, with its
/// brute-force error-bound constant.
pub struct TinyInstance {
    pub problem: ProblemInstance<f64>,
    pub potential: Potential<f64>,
    pub certificate: theory::PlCertificate<f64>,
}

pub fn tiny_instance(m: usize, n: usize, seed: u64) -> Result<TinyInstance> {
    let lambda = 0.5 * (m as f64).sqrt();
    let problem = generate_gaussian(m, n, lambda, seed)?;
    let potential = Potential::sparse(lambda)?;
    let x_hat = problem.x_hat.as_ref().expect("generated");
    let certificate = theory::pl_constant_bruteforce(&problem.a, x_hat, lambda)?;
    Ok(TinyInstance {
        problem,
        potential,
        certificate,
    })
}

fn tiny_rows(n: usize) -> usize {
    (n / 2 + 1).max(2)
}

fn check_tiny_n(n: usize) -> Result<()> {
    if !(3..=10).contains(&n) {
        return Err(Error::invalid(format!(
            "brute-force instances need 3 <= n <= 10, got {n}"
        )));
    }
    Ok(())
}

/// `D_f(x, x_hat) <= gamma ||Ax - b||^2` at random dual points, half of them
/// spread around zero and half around a dual solution.
pub fn error_bound_check(inst: &TinyInstance, points: usize, seed: u64) -> Result<CheckOutcome> {
    let problem = &inst.problem;
    let p = &inst.potential;
    let x_hat = problem.x_hat.as_ref().expect("generated");
    let gamma = inst.certificate.gamma;
    let centre = theory::dual_solution(problem, p).unwrap_or_else(|_| vec![0.0; problem.rows()]);
    let f_hat = p.f_value(x_hat);
    let mut rng = rng_from_seed(seed);
    let mut g = BoxMuller::new(seed ^ 0xB0B);
    let mut t = Tally::new("error bound");
    for s in 0..points {
        let scale = log_uniform(&mut rng, -4.0, 1.0);
        let mut y = normals(&mut g, problem.rows(), scale);
        if s % 2 == 1 {
            for (yi, ci) in y.iter_mut().zip(&centre) {
                *yi += ci;
            }
        }
        let d = problem.a.apply_transpose(&y);
        let x = p.conj_grad(&d);
        let lhs = p.bregman_distance(&d, x_hat);
        let res = scalar::dist(&problem.a.apply(&x), &problem.b);
        let rhs = gamma * res * res;
        t.check(lhs - rhs, 1e-9 * rhs + 1e-12 * (1.0 + f_hat));
    }
    Ok(t.done())
}

fn pl_bound_suite(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    check_tiny_n(opts.n)?;
    let m = tiny_rows(opts.n);
    let mut total = Tally::new("error bound");
    let mut gammas = Vec::new();
    for i in 0..20u64 {
        let inst = tiny_instance(m, opts.n, opts.seed.wrapping_add(i))?;
        gammas.push(inst.certificate.gamma);
        let c = error_bound_check(&inst, 10_000, opts.seed.wrapping_add(1000 + i))?;
        total.samples += c.samples;
        total.violations += c.violations;
        total.worst = total.worst.max(c.worst);
    }
    let (lo, hi) = gammas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &g| (lo.min(g), hi.max(g)));
    Ok(vec![total
        .note(format!("20 instances {m}x{}, gamma in [{lo:.3e}, {hi:.3e}]", opts.n))
        .done()])
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo check of the accelerated envelope
/// `E[D_k] <= 4M^2/(k-1+2M)^2 C_0` from the zero start.
pub fn arbk_envelope(
    problem: &ProblemInstance<f64>,
    potential: &Potential<f64>,
    blocks: usize,
    checkpoints: &[usize],
    seeds: usize,
    base_seed: u64,
) -> Result<CheckOutcome> {
    let x_hat = problem.x_hat.as_ref().ok_or(Error::UnavailableMetric("ground truth"))?;
    let partition = BlockPartition::equal(&problem.a, blocks)?;
    let ctx = Context::new(&problem.a, &problem.b, &partition, potential);
    let y_hat = theory::dual_solution(problem, potential)?;
    let y0 = vec![0.0; problem.rows()];
    let d0 = potential.bregman_distance(&problem.a.apply_transpose(&y0), x_hat);
    let c0 = theory::arbk_initial_constant(&partition, d0, &y0, &y_hat)?;
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    let mut samples = vec![Vec::with_capacity(seeds); checkpoints.len()];
    for s in 0..seeds {
        let mut sampler = BlockSampler::new(partition.lipschitz_all(), 0.0, base_seed.wrapping_add(s as u64))?;
        let mut state = SolverState::zero(&ctx);
        for k in 1..=last {
            arbk_step(&mut state, &ctx, sampler.sample(), ThetaRule::Accelerated);
            if let Some(pos) = checkpoints.iter().position(|&c| c == k) {
                state.refresh(&ctx, true);
                samples[pos].push(potential.bregman_distance(&state.sy, x_hat));
            }
        }
    }
    let mut t = Tally::new("accelerated rate envelope");
    let mut notes = Vec::new();
    for (&k, vals) in checkpoints.iter().zip(&samples) {
        let (mean, se) = mean_and_se(vals);
        let bound = theory::arbk_rate_bound(k, blocks, c0)?;
        t.check(mean - bound, 3.0 * se);
        notes.push(format!("k={k}: mean {mean:.3e} bound {bound:.3e}"));
    }
    Ok(t.note(notes.join("; ")).done())
}

/// Monte-Carlo check of `E[D_k] <= q^k D_0` for plain steps with
/// `alpha = 1`.
pub fn bk_contraction(
    inst: &TinyInstance,
    blocks: usize,
    checkpoints: &[usize],
    seeds: usize,
    base_seed: u64,
) -> Result<CheckOutcome> {
    let problem = &inst.problem;
    let potential = &inst.potential;
    let x_hat = problem.x_hat.as_ref().expect("generated");
    let partition = BlockPartition::equal(&problem.a, blocks)?;
    let ctx = Context::new(&problem.a, &problem.b, &partition, potential);
    let lbar = partition.mean_lipschitz_pow(1.0);
    let q = theory::bk_rate_factor(blocks, inst.certificate.gamma, lbar, lbar, 1.0)?;
    let d0 = potential.bregman_distance(&vec![0.0; problem.cols()], x_hat);
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    let mut samples = vec![Vec::with_capacity(seeds); checkpoints.len()];
    for s in 0..seeds {
        let mut sampler = BlockSampler::new(partition.lipschitz_all(), 1.0, base_seed.wrapping_add(s as u64))?;
        let mut state = SolverState::zero(&ctx);
        for k in 1..=last {
            bk_step(&mut state, &ctx, sampler.sample());
            if let Some(pos) = checkpoints.iter().position(|&c| c == k) {
                state.refresh(&ctx, false);
                samples[pos].push(potential.bregman_distance(&state.sy, x_hat));
            }
        }
    }
    let mut t = Tally::new("plain linear rate");
    let mut notes = vec![format!("q = {q:.6}")];
    for (&k, vals) in checkpoints.iter().zip(&samples) {
        let (mean, se) = mean_and_se(vals);
        let bound = q.powi(k as i32) * d0;
        t.check(mean - bound, 3.0 * se);
        notes.push(format!("k={k}: mean {mean:.3e} bound {bound:.3e}"));
    }
    Ok(t.note(notes.join("; ")).done())
}

/// Fixed-period restarts: mean Bregman distance after `r` periods against
/// `zeta^r D_0`, `r = 1..=periods`. The distance of each accepted point is
/// read off its dual objective, `D = Psi - Psi_hat`.
pub fn restart_contraction(
    inst: &TinyInstance,
    blocks: usize,
    period: usize,
    zeta: f64,
    periods: usize,
    seeds: usize,
    base_seed: u64,
) -> Result<CheckOutcome> {
    let problem = &inst.problem;
    let potential = &inst.potential;
    let x_hat = problem.x_hat.as_ref().expect("generated");
    let psi_hat = -potential.f_value(x_hat);
    let d0 = potential.bregman_distance(&vec![0.0; problem.cols()], x_hat);
    let mut config = RunConfig::new(Method::Rarbk, blocks);
    config.alpha = 0.0;
    config.tol = None;
    config.schedule = Some(RestartSchedule::fixed(period)?);
    config.max_epochs = (periods * period).div_ceil(blocks);
    config.eval_every = config.max_epochs.max(1);
    let mut samples = vec![Vec::with_capacity(seeds); periods];
    for s in 0..seeds {
        config.seed = base_seed.wrapping_add(s as u64);
        let out = rarbk_run(&config, problem, potential)?;
        for (r, vals) in samples.iter_mut().enumerate() {
            let psi = out.restart_objectives[r + 1];
            vals.push((psi - psi_hat).max(0.0));
        }
    }
    let mut t = Tally::new(format!("restart contraction [period {period}]"));
    let mut notes = Vec::new();
    for (r, vals) in samples.iter().enumerate() {
        let (mean, se) = mean_and_se(vals);
        let bound = zeta.powi(r as i32 + 1) * d0;
        t.check(mean - bound, 3.0 * se);
        notes.push(format!("r={}: mean {mean:.3e} bound {bound:.3e}", r + 1));
    }
    Ok(t.note(notes.join("; ")).done())
}

/// Period prescribed for contraction `zeta` with the brute-force constant
/// plugged in as is.
pub fn zeta_period(inst: &TinyInstance, blocks: usize, zeta: f64) -> Result<usize> {
    let partition = BlockPartition::equal(&inst.problem.a, blocks)?;
    period_for_zeta(blocks, partition.l_max(), inst.certificate.gamma, zeta)
}

/// Same period rule with the quadratic-growth constant implied by the error
/// bound. `D <= gamma ||grad Psi||^2` gives the PL constant
/// `mu = 1/(2 gamma)` and hence `Psi - Psi_hat >= (mu/2) dist^2`, so `mu`
/// takes the place of `gamma` in the rule.
pub fn zeta_period_growth(inst: &TinyInstance, blocks: usize, zeta: f64) -> Result<usize> {
    let partition = BlockPartition::equal(&inst.problem.a, blocks)?;
    period_for_zeta(blocks, partition.l_max(), inst.certificate.mu(), zeta)
}

fn rates_suite(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    check_tiny_n(opts.n)?;
    let mut out = Vec::new();
    let envelope_problem = generate_gaussian(10, 15, 1.0, opts.seed)?;
    let sparse = Potential::sparse(1.0)?;
    out.push(arbk_envelope(
        &envelope_problem,
        &sparse,
        5,
        &[10, 50, 200],
        200,
        opts.seed,
    )?);

    let m = tiny_rows(opts.n);
    let inst = tiny_instance(m, opts.n, opts.seed)?;
    out.push(bk_contraction(&inst, m, &[m, 5 * m, 20 * m], 200, opts.seed)?);
    let zeta = (-2.0f64).exp();
    let period = zeta_period(&inst, m, zeta)?;
    out.push(restart_contraction(&inst, m, period, zeta, 5, 200, opts.seed)?);
    let period = zeta_period_growth(&inst, m, zeta)?;
    out.push(restart_contraction(&inst, m, period, zeta, 5, 50, opts.seed)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn tally_semantics() {
        let mut t = Tally::new("t");
        t.check(0.5, 1.0);
        t.check(-3.0, 0.0);
        assert_eq!(t.violations, 0);
        t.check(2.0, 1.0);
        t.check(f64::NAN, 1.0);
        let c = t.done();
        assert_eq!((c.samples, c.violations), (4, 2));
        assert!(!c.passed());
    }

    #[test]
    fn theta_suite_passes() {
        assert!(theta_suite().iter().all(CheckOutcome::passed));
    }
}

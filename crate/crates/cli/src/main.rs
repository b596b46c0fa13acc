//! `bregkacz`: generate problems, run solver comparisons, verify identities.

mod args;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bregkacz::solvers::{self, restart_period_kstar};
use bregkacz::theory::pl_constant_bruteforce;
use bregkacz::verify::{self, Suite, VerifyOptions};
use bregkacz::{generate_gaussian, BlockPartition, Method, Potential, ProblemF64, RestartSchedule, RunConfigF64};
use clap::{Args, Parser, Subcommand};

use crate::args::{Budget, PeriodSpec};
use crate::output::{Format, SummaryRow};

/// Largest column count for which `auto` restart periods enumerate column
/// subsets.
const AUTO_GAMMA_MAX_COLS: usize = 12;

#[derive(Parser, Debug)]
#[command(name = "bregkacz", version, about = "Randomized block Bregman-Kaczmarz solvers")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a Gaussian problem with a sparse solution and save it.
    Generate(GenerateArgs),
    /// Run solvers on a generated or saved problem.
    Run(RunArgs),
    /// Run randomized verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Rows of the generated matrix.
    #[arg(long, env = "BREGKACZ_M", default_value_t = 500)]
    m: usize,
    /// Columns of the generated matrix.
    #[arg(long, env = "BREGKACZ_N", default_value_t = 784)]
    n: usize,
    /// Shrinkage level of the sparse objective.
    #[arg(long, env = "BREGKACZ_LAMBDA", default_value_t = 15.0)]
    lambda: f64,
    /// Seed for problem generation and block sampling; with `--problem-dir`
    /// sampling defaults to the seed the problem was generated with.
    #[arg(long, env = "BREGKACZ_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Skip the condition number (full singular value decomposition).
    #[arg(long, env = "BREGKACZ_NO_KAPPA")]
    no_kappa: bool,
    /// Output directory.
    #[arg(long, env = "BREGKACZ_OUT")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Load the problem from a directory written by `generate` instead.
    #[arg(long, env = "BREGKACZ_PROBLEM_DIR")]
    problem_dir: Option<PathBuf>,
    /// Methods, comma separated.
    #[arg(
        long,
        env = "BREGKACZ_METHOD",
        value_delimiter = ',',
        default_value = "BK,ARBK,RARBK"
    )]
    method: Vec<Method>,
    /// Block counts M, comma separated.
    #[arg(long, env = "BREGKACZ_BLOCKS", value_delimiter = ',', default_value = "125")]
    blocks: Vec<usize>,
    /// Sampling exponent; defaults to 1 for BK and 0 otherwise.
    #[arg(long, env = "BREGKACZ_ALPHA")]
    alpha: Option<f64>,
    /// Tolerance on relative residual or error; `inf` disables stopping.
    #[arg(long, env = "BREGKACZ_TOL", default_value_t = 1e-6)]
    tol: f64,
    /// Epoch budget, or `auto` for 200 max(m, n).
    #[arg(long, env = "BREGKACZ_MAX_EPOCHS", default_value = "auto")]
    max_epochs: Budget,
    /// Epochs between trace rows.
    #[arg(long, env = "BREGKACZ_EVAL_EVERY", default_value_t = 1)]
    eval_every: usize,
    /// Fixed restart period: iterations, `<c>M`, or `auto`.
    #[arg(long, env = "BREGKACZ_RESTART_FIXED", conflicts_with = "restart_doubling")]
    restart_fixed: Option<PeriodSpec>,
    /// Doubling restart schedule with this base period.
    #[arg(long, env = "BREGKACZ_RESTART_DOUBLING")]
    restart_doubling: Option<PeriodSpec>,
    /// Estimate of the error-bound constant used by `auto` periods.
    #[arg(long, env = "BREGKACZ_KSTAR_GAMMA")]
    kstar_gamma: Option<f64>,
    /// Directory for trace files and the summary.
    #[arg(long, env = "BREGKACZ_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "BREGKACZ_FORMAT", value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; runs are independent.
    #[arg(long, env = "BREGKACZ_JOBS", default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suites, comma separated; all when omitted.
    #[arg(long, env = "BREGKACZ_SUITE", value_delimiter = ',')]
    suite: Vec<Suite>,
    /// Column count of the brute-force instances (3..=10).
    #[arg(long, env = "BREGKACZ_N", default_value_t = 8)]
    n: usize,
    #[arg(long, env = "BREGKACZ_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write the JSON-lines report to this file.
    #[arg(long, env = "BREGKACZ_OUT")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let argv = match args::expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a).map(|()| true),
        Command::Run(a) => cmd_run(&a).map(|()| true),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn generate(p: &ProblemArgs, with_kappa: bool) -> Result<ProblemF64> {
    let mut problem = generate_gaussian(p.m, p.n, p.lambda, p.seed)?;
    if with_kappa {
        problem.kappa = Some(problem.condition_number()?);
    }
    Ok(problem)
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let problem = generate(&a.problem, !a.no_kappa)?;
    problem.save(&a.out)?;
    let nnz = problem
        .x_hat
        .as_ref()
        .map_or(0, |x| x.iter().filter(|v| **v != 0.0).count());
    emit(&format!(
        "wrote {}x{} problem to {} (nnz(x_hat) = {nnz}{})\n",
        problem.rows(),
        problem.cols(),
        a.out.display(),
        problem.kappa.map(|k| format!(", kappa = {k:.6}")).unwrap_or_default()
    ))
}

/// Sampler seed: `--seed` when given, else the seed a loaded problem was
/// generated with.
fn run_seed(a: &RunArgs, problem: &ProblemF64) -> u64 {
    match problem.seed {
        Some(s) if a.problem_dir.is_some() && !explicit(&["--seed"], "seed") => s,
        _ => a.problem.seed,
    }
}

fn load_problem(a: &RunArgs) -> Result<(ProblemF64, f64)> {
    match &a.problem_dir {
        Some(dir) => {
            let problem = ProblemF64::load(dir).with_context(|| format!("loading {}", dir.display()))?;
            // an explicit --lambda wins over the generation metadata
            let lambda = if explicit(&["--lambda"], "lambda") {
                a.problem.lambda
            } else {
                problem.lambda_gen.unwrap_or(a.problem.lambda)
            };
            Ok((problem, lambda))
        }
        None => Ok((generate(&a.problem, false)?, a.problem.lambda)),
    }
}

/// Whether a flag was given on the command line or through the environment.
fn explicit(flags: &[&str], name: &str) -> bool {
    std::env::var_os(args::env_name(name)).is_some()
        || std::env::args().any(|arg| flags.iter().any(|f| arg == *f || arg.starts_with(&format!("{f}="))))
}

/// `K*` from a supplied constant, else from subset enumeration on small
/// problems, else the `165 M` period used for the large comparisons.
fn auto_period(problem: &ProblemF64, lambda: f64, blocks: usize, gamma: Option<f64>) -> Result<usize> {
    let gamma = match gamma {
        Some(g) => Some(g),
        None => match &problem.x_hat {
            Some(x_hat) if problem.cols() <= AUTO_GAMMA_MAX_COLS => {
                Some(pl_constant_bruteforce(&problem.a, x_hat, lambda)?.gamma)
            }
            _ => None,
        },
    };
    match gamma {
        Some(g) => {
            let l_max = BlockPartition::equal(&problem.a, blocks)?.l_max();
            Ok(restart_period_kstar(blocks, l_max, g)?)
        }
        None => Ok(165 * blocks),
    }
}

fn build_configs(a: &RunArgs, problem: &ProblemF64, lambda: f64) -> Result<Vec<RunConfigF64>> {
    if a.method.is_empty() || a.blocks.is_empty() {
        bail!("at least one method and one block count are required");
    }
    let max_epochs = a.max_epochs.resolve(problem.rows(), problem.cols());
    let mut configs = Vec::new();
    for &method in &a.method {
        for &blocks in &a.blocks {
            let mut c = RunConfigF64::new(method, blocks).with_tol(a.tol);
            c.alpha = a.alpha.unwrap_or(method.default_alpha());
            c.seed = run_seed(a, problem);
            c.max_epochs = max_epochs;
            c.eval_every = a.eval_every;
            if method == Method::Rarbk {
                let auto = || auto_period(problem, lambda, blocks, a.kstar_gamma);
                c.schedule = Some(match (a.restart_fixed, a.restart_doubling) {
                    (_, Some(spec)) => RestartSchedule::doubling(spec.resolve(blocks, auto)?)?,
                    (Some(spec), None) => RestartSchedule::fixed(spec.resolve(blocks, auto)?)?,
                    (None, None) => RestartSchedule::fixed(PeriodSpec::Auto.resolve(blocks, auto)?)?,
                });
            }
            configs.push(c);
        }
    }
    Ok(configs)
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let (problem, lambda) = load_problem(a)?;
    let potential = Potential::sparse(lambda)?;
    let configs = build_configs(a, &problem, lambda)?;
    let outputs = run_all(&configs, &problem, &potential, a.jobs.max(1))?;
    let seed = run_seed(a, &problem);

    let rows: Vec<SummaryRow> = outputs.iter().map(|o| SummaryRow::from_output(o, seed)).collect();
    emit(&output::summary_table(&rows))?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for o in &outputs {
            output::write_trace(dir, &format!("{}_seed{seed}", o.label), &o.trace, a.format)?;
        }
        write(dir, "summary.csv", output::summary_csv(&rows))?;
    }
    Ok(())
}

/// Writes to stdout; a closed pipe on the reading end is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write(dir: &Path, name: &str, text: String) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_all(
    configs: &[RunConfigF64],
    problem: &ProblemF64,
    potential: &Potential<f64>,
    jobs: usize,
) -> Result<Vec<bregkacz::RunOutputF64>> {
    let run_one = |c: &RunConfigF64| solvers::run(c, problem, potential).with_context(|| format!("run {}", c.label()));
    if jobs == 1 || configs.len() == 1 {
        return configs.iter().map(run_one).collect();
    }
    let chunk = configs.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(run_one).collect::<Result<Vec<_>>>()))
            .collect();
        let mut all = Vec::with_capacity(configs.len());
        for h in handles {
            all.extend(h.join().expect("solver thread panicked")?);
        }
        Ok(all)
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let suites = if a.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        a.suite.clone()
    };
    let opts = VerifyOptions { seed: a.seed, n: a.n };
    let mut lines = Vec::new();
    let mut all_passed = true;
    for suite in suites {
        let report = verify::run_suite(suite, &opts)?;
        for c in &report.checks {
            let line = output::check_json(&report, c);
            emit(&format!("{line}\n"))?;
            lines.push(line);
        }
        eprintln!(
            "{:<12} {}",
            suite.as_str(),
            if report.passed() { "PASS" } else { "FAIL" }
        );
        all_passed &= report.passed();
    }
    if let Some(path) = &a.out {
        let mut text = lines.join("\n");
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(all_passed)
}

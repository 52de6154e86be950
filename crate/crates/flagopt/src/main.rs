//! `flagopt`: benchmark runner for Riemannian optimization on flag
//! manifolds.
//!
//! Exit codes: 0 on success, 1 when an invariant or run fails, 2 on usage
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flag_manifold::solver::{LineSearchMode, SolverConfig};
use flag_manifold::FlagSignature;
use flagopt::{
    output, run_property_suite, run_sweep, run_trajectory, ExperimentConfig, OutputFormat, Problem,
    SolverKind, SweepAxis,
};

#[derive(Parser)]
#[command(
    name = "flagopt",
    version,
    about = "Benchmarks for optimization on flag manifolds",
    after_help = "Exit codes: 0 success, 1 invariant/run failure, 2 usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials of one problem and emit convergence trajectories.
    Bench(BenchArgs),
    /// Sweep the ambient dimension or the flag depth and aggregate
    /// accuracy and timing.
    Sweep(SweepArgs),
    /// Run the randomized property suite over all geometric invariants.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Principal,
    Eigenflag,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Principal => Problem::Principal,
            ProblemArg::Eigenflag => Problem::Eigenflag,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Sd,
    Cg,
    Newton,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Sd => SolverKind::Sd,
            SolverArg::Cg => SolverKind::Cg,
            SolverArg::Newton => SolverKind::Newton,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LineSearchArg {
    Armijo,
    Golden,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct SolverOpts {
    /// Which iteration to run.
    #[arg(long, value_enum, default_value = "sd")]
    solver: SolverArg,
    /// Iteration budget.
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Stop when the Frobenius norm of the Riemannian gradient drops below
    /// this.
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    /// Step length strategy along geodesics.
    #[arg(long, value_enum, default_value = "armijo")]
    line_search: LineSearchArg,
}

impl SolverOpts {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            line_search: match self.line_search {
                LineSearchArg::Armijo => LineSearchMode::Armijo,
                LineSearchArg::Golden => LineSearchMode::GoldenExact,
            },
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Comma-separated subspace dimensions, e.g. `3,7,12`.
    #[arg(long)]
    sig: String,
    /// Ambient dimension.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[command(flatten)]
    solver: SolverOpts,
    /// Trajectory file; trials beyond the first go to `<stem>_trial<k>`.
    /// Without it only the per-trial summary is printed.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Subspace dimensions for an ambient sweep, e.g. `3,9,21`.
    #[arg(long)]
    sig: Option<String>,
    /// Ambient range `start:end[:step]` (inclusive), e.g. `30:100:10`.
    #[arg(long, conflicts_with = "sweep_depth", requires = "sig")]
    sweep_ambient: Option<String>,
    /// Depth range `start:end[:step]` (inclusive); dims are `2,4,...,2d`.
    #[arg(long, conflicts_with = "sig", requires = "n")]
    sweep_depth: Option<String>,
    /// Ambient dimension for a depth sweep.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[command(flatten)]
    solver: SolverOpts,
    /// Report file; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid dimension {p:?}"))
        })
        .collect()
}

/// `start:end[:step]`, inclusive of `end` when it lies on the grid.
fn parse_range(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    let (start, end, step) = match parts.as_slice() {
        [a, b] => (a.parse()?, b.parse()?, 1usize),
        [a, b, c] => (a.parse()?, b.parse()?, c.parse()?),
        _ => bail!("range must be start:end or start:end:step, got {s:?}"),
    };
    if step == 0 || end < start {
        bail!("empty range {s:?}");
    }
    Ok((start..=end).step_by(step).collect())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bench(args) => bench(args),
        Command::Sweep(args) => sweep(args),
        Command::Check(args) => check(args),
    }
}

fn usage_error(msg: String) -> Result<ExitCode> {
    eprintln!("error: {msg}");
    Ok(ExitCode::from(2))
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let dims = match parse_dims(&args.sig) {
        Ok(d) => d,
        Err(e) => return usage_error(format!("{e:#}")),
    };
    let sig = match FlagSignature::new(dims, args.n) {
        Ok(s) => s,
        Err(e) => return usage_error(e.to_string()),
    };
    if args.trials == 0 {
        return usage_error("trials must be at least 1".into());
    }
    let cfg = ExperimentConfig {
        problem: args.problem.into(),
        sig,
        seed: args.seed,
        trials: args.trials,
        solver: args.solver.solver.into(),
        solver_config: args.solver.config(),
        out: args.out,
        format: args.format.into(),
    };
    let outcomes = run_trajectory(&cfg)?;
    for o in &outcomes {
        let gap = o
            .relative_gap()
            .map(|g| format!("  rel_gap {}", output::fmt_f64(g)))
            .unwrap_or_default();
        println!(
            "trial {}: f {}  grad_norm {}  iters {}  termination {:?}{}",
            o.trial,
            output::fmt_f64(o.final_value()),
            output::fmt_f64(o.result.final_grad_norm()),
            o.result.iterations(),
            o.result.termination,
            gap
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let axis = match (&args.sweep_ambient, &args.sweep_depth) {
        (Some(range), None) => {
            let dims = match args.sig.as_deref().map(parse_dims).transpose() {
                Ok(Some(d)) => d,
                Ok(None) => return usage_error("--sweep-ambient requires --sig".into()),
                Err(e) => return usage_error(format!("{e:#}")),
            };
            match parse_range(range) {
                Ok(values) => SweepAxis::Ambient { dims, values },
                Err(e) => return usage_error(format!("{e:#}")),
            }
        }
        (None, Some(range)) => {
            let ambient = match args.n {
                Some(n) => n,
                None => return usage_error("--sweep-depth requires --n".into()),
            };
            match parse_range(range) {
                Ok(values) => SweepAxis::Depth { ambient, values },
                Err(e) => return usage_error(format!("{e:#}")),
            }
        }
        _ => {
            return usage_error(
                "exactly one of --sweep-ambient or --sweep-depth is required".into(),
            )
        }
    };
    if let Err(e) = axis.signatures() {
        return usage_error(format!("{e:#}"));
    }
    if args.trials == 0 {
        return usage_error("trials must be at least 1".into());
    }
    let report = run_sweep(
        args.problem.into(),
        &axis,
        args.trials,
        args.seed,
        args.solver.solver.into(),
        &args.solver.config(),
    )?;
    let format: OutputFormat = args.format.into();
    match &args.out {
        Some(path) => output::write_sweep(path, &report, format)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            let body = match format {
                OutputFormat::Csv => output::sweep_csv(&report),
                OutputFormat::Json => output::sweep_json(&report),
            };
            print!("{body}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check(args: CheckArgs) -> Result<ExitCode> {
    let report = run_property_suite(args.seed);
    print!("{}", report.render());
    if report.all_passed() {
        println!("all invariants hold");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("invariant failures detected");
        Ok(ExitCode::from(1))
    }
}

#[cfg(test)]
mod tests {
    use super::{parse_dims, parse_range};

    #[test]
    fn dims_parse_with_whitespace() {
        assert_eq!(parse_dims("3,7,12").unwrap(), vec![3, 7, 12]);
        assert_eq!(parse_dims(" 1 , 2 ").unwrap(), vec![1, 2]);
        assert!(parse_dims("3,x").is_err());
        assert!(parse_dims("").is_err());
    }

    #[test]
    fn ranges_are_inclusive_with_optional_step() {
        assert_eq!(
            parse_range("30:100:10").unwrap(),
            vec![30, 40, 50, 60, 70, 80, 90, 100]
        );
        assert_eq!(parse_range("1:4").unwrap(), vec![1, 2, 3, 4]);
        // A step that overshoots the end keeps only on-grid values.
        assert_eq!(parse_range("1:10:4").unwrap(), vec![1, 5, 9]);
        assert_eq!(parse_range("5:5").unwrap(), vec![5]);
        assert!(parse_range("10:1").is_err());
        assert!(parse_range("1:5:0").is_err());
        assert!(parse_range("7").is_err());
    }
}

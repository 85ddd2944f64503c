//! `ipmqp` — solve synthetic or file-based convex QP instances with the
//! short-step or long-step feasible interior point method, certify the
//! parameter constants, and run scaling studies.
//!
//! Exit codes: 0 success/converged, 2 audit violation (or failed
//! certification), 3 validation/parse errors, 4 iteration limit, 64 usage
//! errors, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ipmqp_cli::manifest::{load_instance, save_instance};
use ipmqp_cli::trace::{save_scaling_csv, save_trace};
use ipmqp_cli::CliError;
use ipmqp_core::analysis::{
    certify_alpha_hat, certify_shortstep_params, scaling_experiment, AnalysisError, CertReport,
};
use ipmqp_core::bounds::shared_constant;
use ipmqp_core::generator::{generate, GenError, GenSpec};
use ipmqp_core::ipm::{run, SolveError, SolverConfig, SolverStatus, StepMode, Variant};
use ipmqp_core::newton::{InexactnessPolicy, InjectShape};
use ipmqp_core::problem::Iterate;
use ipmqp_core::QpProblem;

#[derive(Parser)]
#[command(
    name = "ipmqp",
    version,
    about = "Feasible interior point methods for convex QP with audited inexact Newton steps"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance from a manifest or a freshly generated one.
    Solve(SolveArgs),
    /// Check the certified parameter constants over a range of dimensions.
    Certify(CertifyArgs),
    /// Fit the iteration-count exponent over a list of problem sizes.
    Scale(ScaleArgs),
    /// Generate an instance and write it to disk.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Short,
    Long,
}

#[derive(Clone, Copy, ValueEnum)]
enum InexactArg {
    Exact,
    Inject,
    Iterative,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    RandomSphere,
    AdversarialSign,
    AlignedWithXi,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepModeArg {
    Theory,
    Practical,
}

/// `n,m,density,qrank,mu0` as a single comma-separated value.
#[derive(Clone, Copy, Debug)]
struct GenSpecArg {
    n: usize,
    m: usize,
    density: f64,
    q_rank: usize,
    mu0: f64,
}

impl FromStr for GenSpecArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 5 {
            return Err("expected N,M,DENSITY,QRANK,MU0".into());
        }
        Ok(GenSpecArg {
            n: parts[0].trim().parse().map_err(|e| format!("bad n: {e}"))?,
            m: parts[1].trim().parse().map_err(|e| format!("bad m: {e}"))?,
            density: parts[2].trim().parse().map_err(|e| format!("bad density: {e}"))?,
            q_rank: parts[3].trim().parse().map_err(|e| format!("bad qrank: {e}"))?,
            mu0: parts[4].trim().parse().map_err(|e| format!("bad mu0: {e}"))?,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance manifest (must include a start for the feasible method).
    #[arg(long, value_name = "PATH", conflicts_with = "generate")]
    manifest: Option<PathBuf>,
    /// Generate an instance instead: N,M,DENSITY,QRANK,MU0.
    #[arg(long, value_name = "SPEC")]
    generate: Option<GenSpecArg>,
    /// Seed for generation and residual shapes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Short)]
    variant: VariantArg,
    /// Admissible relative residual; defaults to 0.3 (short) / 0.05 (long).
    #[arg(long)]
    delta: Option<f64>,
    /// Target average complementarity gap.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = InexactArg::Exact)]
    inexact: InexactArg,
    #[arg(long, value_enum, default_value_t = ShapeArg::RandomSphere)]
    inject_shape: ShapeArg,
    /// Fraction of the residual budget an injection spends.
    #[arg(long, default_value_t = 1.0)]
    inject_fraction: f64,
    #[arg(long, value_enum, default_value_t = StepModeArg::Theory)]
    step_mode: StepModeArg,
    /// Assert every lemma bound and neighbourhood membership at runtime.
    #[arg(long)]
    audit: bool,
    /// Write the per-iteration trace CSV here.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Override the derived outer iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 0.3)]
    delta_short: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    delta_long: f64,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Short)]
    variant: VariantArg,
    /// Comma-separated strictly increasing sizes, at least three.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write `n,iterations` CSV here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Instance shape: N,M,DENSITY,QRANK,MU0.
    #[arg(long, value_name = "SPEC")]
    spec: GenSpecArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for A.mtx, Q.mtx and manifest.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

enum CmdError {
    Cli(CliError),
    Gen(GenError),
    Solve(SolveError),
    Analysis(AnalysisError),
    Other(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Cli(e) => write!(f, "{e}"),
            CmdError::Gen(e) => write!(f, "{e}"),
            CmdError::Solve(e) => write!(f, "{e}"),
            CmdError::Analysis(e) => write!(f, "{e}"),
            CmdError::Other(e) => write!(f, "{e}"),
        }
    }
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            // Anything wrong with inputs: files, instance data, configuration.
            CmdError::Cli(_) | CmdError::Gen(_) | CmdError::Solve(_) => 3,
            CmdError::Analysis(AnalysisError::TooFewSizes(_))
            | CmdError::Analysis(AnalysisError::BadSizes(_)) => 64,
            CmdError::Analysis(AnalysisError::Gen(_))
            | CmdError::Analysis(AnalysisError::Solve(_)) => 3,
            CmdError::Analysis(_) | CmdError::Other(_) => 1,
        }
    }
}

impl From<CliError> for CmdError {
    fn from(e: CliError) -> Self {
        CmdError::Cli(e)
    }
}
impl From<GenError> for CmdError {
    fn from(e: GenError) -> Self {
        CmdError::Gen(e)
    }
}
impl From<SolveError> for CmdError {
    fn from(e: SolveError) -> Self {
        CmdError::Solve(e)
    }
}
impl From<AnalysisError> for CmdError {
    fn from(e: AnalysisError) -> Self {
        CmdError::Analysis(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // Usage problems go to the diagnostic stream with code 64.
            eprint!("{e}");
            return ExitCode::from(64);
        }
    };

    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IPM_LOG", "error")).init();

    let outcome = match cli.cmd {
        Command::Solve(args) => cmd_solve(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Scale(args) => cmd_scale(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn build_config(args: &SolveArgs) -> SolverConfig {
    let mut cfg = match args.variant {
        VariantArg::Short => SolverConfig::short_step(),
        VariantArg::Long => SolverConfig::long_step(),
    };
    if let Some(delta) = args.delta {
        cfg.delta = delta;
    }
    cfg.epsilon = args.epsilon;
    cfg.max_iters = args.max_iters;
    cfg.step_mode = match args.step_mode {
        StepModeArg::Theory => StepMode::TheoryFixed,
        StepModeArg::Practical => StepMode::Practical,
    };
    cfg.audit = args.audit;
    let shape = match args.inject_shape {
        ShapeArg::RandomSphere => InjectShape::RandomSphere,
        ShapeArg::AdversarialSign => InjectShape::AdversarialSign,
        ShapeArg::AlignedWithXi => InjectShape::AlignedWithXi,
    };
    cfg.inexact = match args.inexact {
        InexactArg::Exact => InexactnessPolicy::exact(),
        InexactArg::Inject => {
            InexactnessPolicy::inject(cfg.delta, shape, args.inject_fraction, args.seed)
        }
        InexactArg::Iterative => InexactnessPolicy::iterative(cfg.delta),
    };
    cfg
}

fn obtain_instance(args: &SolveArgs) -> Result<(QpProblem, Iterate), CmdError> {
    match (&args.manifest, &args.generate) {
        (Some(path), None) => {
            let (problem, start) = load_instance(path)?;
            let start = start.ok_or_else(|| {
                CmdError::Other(format!(
                    "{}: manifest contains no start; the feasible method needs one",
                    path.display()
                ))
            })?;
            Ok((problem, start))
        }
        (None, Some(g)) => {
            let spec = GenSpec {
                n: g.n,
                m: g.m,
                density: g.density,
                q_rank: g.q_rank,
                mu0: g.mu0,
                seed: args.seed,
            };
            Ok(generate(&spec)?)
        }
        _ => Err(CmdError::Other(
            "exactly one of --manifest and --generate is required".into(),
        )),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<u8, CmdError> {
    let (problem, start) = obtain_instance(&args)?;
    let cfg = build_config(&args);
    let result = run(&problem, &start, &cfg)?;

    println!(
        "status: {:?}\niterations: {}\nfinal mu: {}",
        result.status,
        result.iterations,
        result.final_iterate.mu()
    );
    if let Some(diag) = &result.diagnostic {
        println!("detail: {diag}");
    }
    if let Some(path) = &args.trace {
        save_trace(&result, path)?;
        println!("trace: {}", path.display());
    }
    Ok(match result.status {
        SolverStatus::Converged => 0,
        SolverStatus::AuditViolation => 2,
        SolverStatus::IterationLimit => 4,
        SolverStatus::NumericalBreakdown => 1,
    })
}

fn print_cert(label: &str, report: &CertReport) {
    println!(
        "{label}: {} (worst slack {:e})",
        if report.passed { "pass" } else { "FAIL" },
        report.worst_slack
    );
    for s in &report.samples {
        println!("  n = {:<8} lhs = {:<22} rhs = {:<22} slack = {:e}", s.n, s.lhs, s.rhs, s.slack);
    }
}

fn cmd_certify(args: CertifyArgs) -> Result<u8, CmdError> {
    let ns: Vec<u64> = vec![2, 3, 5, 10, 100, 1_000, 10_000, 1_000_000];
    println!(
        "long-step shared constant (1+delta)^2/gamma*(1/gamma-sigma)^2 = {}",
        shared_constant(args.gamma, args.sigma, args.delta_long)
    );
    let alpha = certify_alpha_hat(args.gamma, args.sigma, args.delta_long, &ns);
    print_cert("alpha_hat = 1/(50n) against the three stepsize conditions", &alpha);
    let short = certify_shortstep_params(args.theta, args.beta, args.delta_short, &ns);
    print_cert("short-step parameter inequality", &short);
    Ok(if alpha.passed && short.passed { 0 } else { 2 })
}

fn cmd_scale(args: ScaleArgs) -> Result<u8, CmdError> {
    let variant = match args.variant {
        VariantArg::Short => Variant::ShortStep,
        VariantArg::Long => Variant::LongStep,
    };
    let report = scaling_experiment(variant, &args.sizes, args.epsilon, args.trials, args.seed)?;
    println!("sizes: {:?}", report.sizes);
    println!("iterations: {:?}", report.iterations);
    println!("fitted exponent: {}", report.fitted_exponent);
    println!("r_squared: {}", report.r_squared);
    if let Some(path) = &args.out {
        save_scaling_csv(&report, path)?;
        println!("report: {}", path.display());
    }
    Ok(0)
}

fn cmd_gen(args: GenArgs) -> Result<u8, CmdError> {
    let spec = GenSpec {
        n: args.spec.n,
        m: args.spec.m,
        density: args.spec.density,
        q_rank: args.spec.q_rank,
        mu0: args.spec.mu0,
        seed: args.seed,
    };
    let (problem, start) = generate(&spec)?;
    let manifest = save_instance(&args.out, &problem, Some(&start), Some(args.spec.mu0))?;
    println!("wrote {}", manifest.display());
    Ok(0)
}

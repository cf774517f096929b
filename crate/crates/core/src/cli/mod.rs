//! Command-line driver: resolves a [`RunConfig`], runs the pipeline and
//! writes its artifacts with a hashed manifest.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | a check of the run failed (including solver non-convergence) |
//! | 2 | usage error |
//! | 3 | invalid problem, parameters or config file |
//! | 4 | I/O or serialization failure |
//! | 5 | numerical failure raised by a solver |

mod checks;
mod config;
mod output;
mod pipelines;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use checks::{
    adjoint_checks, all_pass, cost_check, duality_checks, duality_run, max_condition_check, product_rule_checks,
    run_example, state_checks, Check, DualityRun, ExampleRun,
};
pub use config::{CommandKind, RunConfig};
pub use output::{sha256_hex, stale_files, write_outputs, Artifact, FileEntry, RunManifest, MANIFEST_FILE, TIMING_FILE};
pub use pipelines::{run_pipeline, verdict_table, Outcome};

use crate::audit::VerdictOptions;
use crate::error::{Error, Result};
use crate::model::{catalog_config, ProblemConfig};
use crate::optimize::{AscentMode, OptimizerOptions};
use crate::solver::{BasisSpec, PicardOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

/// Default output directory when `--out` is not given.
pub const OUT_ENV: &str = "FBDSDE_OUT";
const DEFAULT_OUT: &str = "fbdsde-out";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::Validation(_) | Error::Shape { .. } | Error::UnknownProblem(_) => EXIT_INVALID,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        Error::NonFinite { .. } | Error::SingularRegression { .. } | Error::NotConverged(_) => EXIT_NUMERICAL,
    }
}

#[derive(Parser)]
#[command(name = "fbdsde", version, about = "Solve, audit and optimize controlled forward-backward doubly stochastic systems with jumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the state system under a constant control
    Solve(RunArgs),
    /// Solve the state and adjoint systems under a constant control
    Adjoint(RunArgs),
    /// Check the sufficient conditions and render a verdict
    Audit(AuditArgs),
    /// Projected Hamiltonian ascent from a constant control
    Optimize(OptimizeArgs),
    /// End-to-end checks on the closed-form benchmark
    VerifyExample(VerifyArgs),
    /// Product rule and duality identities
    Identities(IdentityArgs),
    /// Re-run the configuration recorded in a manifest
    Replay(ReplayArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in problem name
    #[arg(long)]
    catalog: Option<String>,
    /// TOML problem file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Time steps N
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Monte Carlo paths M
    #[arg(long, default_value_t = 4000)]
    paths: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Picard damping
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Picard tolerance on the damped update norm
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    picard_iter: usize,
    /// Regression polynomial degree (1 or 2)
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Output directory [default: $FBDSDE_OUT, else ./fbdsde-out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Override of the initial state (broadcast to every coordinate)
    #[arg(long, allow_negative_numbers = true)]
    x: Option<f64>,
    /// Constant control, one value or one per dimension [default: centre of U]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    control: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Constant probe controls
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    probe: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    monotonicity_samples: usize,
    /// Exit 1 unless the verdict is certified
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    /// Affine feedback in the state instead of open-loop controls
    #[arg(long)]
    feedback: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    x: f64,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0.5,-0.5,1.0")]
    probe: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    x: f64,
    /// Reference control u
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    control: f64,
    /// Perturbed control v
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    probe: f64,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct ReplayArgs {
    /// manifest.json of an earlier run
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn load_source(source: &Source, x: Option<f64>) -> Result<(String, ProblemConfig)> {
    let (label, mut problem) = match (&source.catalog, &source.config) {
        (Some(name), _) => (format!("catalog:{name}"), catalog_config(name, None)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            (format!("file:{}", path.display()), ProblemConfig::from_toml(&text)?)
        }
        (None, None) => return Err(Error::Validation("need --catalog or --config".into())),
    };
    if let Some(x) = x {
        problem.horizon.x0 = vec![x; problem.dims.n];
    }
    Ok((label, problem))
}

fn base_config(command: CommandKind, source: String, problem: ProblemConfig, grid: &GridArgs) -> RunConfig {
    let solver = PicardOptions {
        theta: grid.theta,
        tol: grid.tol,
        max_iter: grid.picard_iter,
        basis: BasisSpec { degree: grid.degree },
    };
    RunConfig {
        command,
        source,
        problem,
        steps: grid.steps,
        paths: grid.paths,
        seed: grid.seed,
        control: Vec::new(),
        probes: Vec::new(),
        solver,
        optimizer: OptimizerOptions {
            solver,
            ..OptimizerOptions::default()
        },
        audit: VerdictOptions {
            solver,
            seed: grid.seed,
            ..VerdictOptions::default()
        },
        strict: false,
    }
}

fn from_run_args(command: CommandKind, args: RunArgs) -> Result<(RunConfig, PathBuf)> {
    let (label, problem) = load_source(&args.source, args.x)?;
    let mut config = base_config(command, label, problem, &args.grid);
    config.control = args.control;
    Ok((config, out_dir(args.grid.out)))
}

fn resolve(command: Command) -> Result<(RunConfig, PathBuf)> {
    Ok(match command {
        Command::Solve(args) => from_run_args(CommandKind::Solve, args)?,
        Command::Adjoint(args) => from_run_args(CommandKind::Adjoint, args)?,
        Command::Audit(args) => {
            let (mut config, out) = from_run_args(CommandKind::Audit, args.run)?;
            config.probes = args.probe;
            config.audit.monotonicity_samples = args.monotonicity_samples;
            config.strict = args.strict;
            (config, out)
        }
        Command::Optimize(args) => {
            let (mut config, out) = from_run_args(CommandKind::Optimize, args.run)?;
            config.optimizer.max_iter = args.iterations;
            if args.feedback {
                config.optimizer.mode = AscentMode::Feedback;
            }
            (config, out)
        }
        Command::VerifyExample(args) => {
            let problem = catalog_config("example31", Some(args.x))?;
            let mut config = base_config(CommandKind::VerifyExample, "catalog:example31".into(), problem, &args.grid);
            config.control = vec![0.0];
            config.probes = args.probe;
            config.strict = true;
            (config, out_dir(args.grid.out))
        }
        Command::Identities(args) => {
            let problem = catalog_config("example31", Some(args.x))?;
            let mut config = base_config(CommandKind::Identities, "catalog:example31".into(), problem, &args.grid);
            config.control = vec![args.control];
            config.probes = vec![args.probe];
            (config, out_dir(args.grid.out))
        }
        Command::Replay(args) => {
            let manifest = RunManifest::read(&args.manifest)?;
            let config = manifest
                .config
                .ok_or_else(|| Error::Validation("manifest records no configuration".into()))?;
            (config, out_dir(args.out))
        }
    })
}

/// Runs `config`, writes its artifacts, `manifest.json` and the wall-clock
/// record into `out`, and returns the manifest (whose `exit_code` is 0 or 1).
pub fn execute(config: &RunConfig, out: &Path) -> Result<(RunManifest, Vec<String>)> {
    let started = Instant::now();
    let outcome = run_pipeline(config)?;
    let mut manifest = RunManifest::new(Some(config.clone()));
    manifest.exit_code = if outcome.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    let manifest = write_outputs(&outcome.artifacts, manifest, out)?;
    let timing = serde_json::json!({ "wall_clock_seconds": started.elapsed().as_secs_f64() });
    std::fs::write(out.join(TIMING_FILE), serde_json::to_vec_pretty(&timing)?)?;
    Ok((manifest, outcome.summary))
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = resolve(cli.command).and_then(|(config, out)| {
        let (manifest, summary) = execute(&config, &out)?;
        for line in summary {
            println!("{line}");
        }
        println!("wrote {} files and {MANIFEST_FILE} to {}", manifest.files.len(), out.display());
        Ok(manifest.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

//! `lagrot`: solve the Lagrangian phase equation, rotate convex potentials,
//! run verification suites and turn reports into CSV.

mod commands;
mod output;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit codes shared by every subcommand.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    /// Solver failure, or a non-convex input to `rotate`/`legendre`.
    pub const FAILED: u8 = 2;
    pub const BOUND: u8 = 3;
    pub const VERIFY: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "lagrot", version, about = "Lagrangian phase operator and Lewy–Yuan rotation toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Tolerance override: Newton residual for solves, Hessian-bound slack for rotations.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for every randomized check.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve Σ arctan λᵢ(D²u) = ψ with Dirichlet data.
    Solve(SolveArgs),
    /// Rotate a convex potential down by the angle α.
    Rotate(RotateArgs),
    /// Legendre transform of a convex potential.
    Legendre(LegendreArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Turn JSON reports into CSV series.
    Report(ReportArgs),
    /// Hessian-estimate probe over the quadratic family a|x|²/2.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Arctan,
    Concave,
    Ma,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Phase field (scalar field JSON).
    #[arg(long)]
    pub phase: PathBuf,
    /// Boundary values: [{"node": k, "value": v}, ...].
    #[arg(long)]
    pub boundary: PathBuf,
    /// Grid, e.g. "n=129,box=[-1,1]^2"; must match the phase grid. Defaults to it.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value = "arctan")]
    pub variant: Variant,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Exact solution to compare against (scalar field JSON on the same grid).
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Continuation steps from the phase of the identity; 0 solves directly.
    #[arg(long, default_value_t = 0)]
    pub continuation: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct RotateArgs {
    /// Convex potential u (scalar field JSON).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Rotated potential ū.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Rotation angle in (0, π/2); defaults to π/4.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LegendreArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dual grid spec; defaults to a grid over the slope range of the input.
    #[arg(long)]
    pub dual: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Convex,
    Rotation,
    Operator,
    Geometry,
    Solver,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Potential u used by the convex, rotation and geometry suites.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Phase field for the geometry suite (needs --in).
    #[arg(long)]
    pub phase: Option<PathBuf>,
    /// A rotated potential ū whose Hessian bounds are checked as-is.
    #[arg(long)]
    pub rotated: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Reports written by solve, rotate, verify or probe.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long, default_value = "n=33,box=[-1,1]^2")]
    pub grid: String,
    /// Curvatures a of the family, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
    pub amplitudes: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// A failure with its exit code; the message goes to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::new(exit::USAGE, format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Solve(a) => commands::solve(a, g),
        Command::Rotate(a) => commands::rotate(a, g),
        Command::Legendre(a) => commands::legendre(a, g),
        Command::Verify(a) => verify::run(a, g),
        Command::Report(a) => report::run(a, g),
        Command::Probe(a) => commands::probe(a, g),
    };
    match outcome {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            eprintln!("lagrot: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

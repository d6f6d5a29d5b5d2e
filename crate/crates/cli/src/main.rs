//! `psgraph`: spectrum, identity verification and plot-ready tables for
//! eigenfunctions on regular graphs.
//!
//! Exit codes: 0 all identities pass, 1 an identity failed, 2 usage or
//! configuration error, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psgraph::verify::BranchPolicy;
use psgraph::Error;

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ConvergenceFailure(_)
            | Error::ExceptionalParameter(_)
            | Error::BandEdge
            | Error::NotAnEigenfunction(_)
            | Error::JordanBlock { .. }
            | Error::SingularGram
            | Error::DepthTooSmall { .. }
            | Error::CylinderTooShallow { .. }
            | Error::CylindersOverlap
            | Error::SupportTooWide
            | Error::TemperedParameter => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "psgraph", version, about = "Patterson-Sullivan, Wigner and Ruelle distributions on regular graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Laplace spectrum with spectral parameters and classifications.
    Spectrum(RunArgs),
    /// Run identity suites and emit a JSON report.
    Verify(RunArgs),
    /// Write PS/Wigner and c-function CSV tables.
    Analyze(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Principal,
    Both,
}

#[derive(Args)]
struct RunArgs {
    /// Graph name, edge-list or JSON path, or random:v,d,seed.
    #[arg(long)]
    graph: Option<String>,
    /// Suites to run (comma separated, or `all`).
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    /// Largest random symbol depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Largest level in the Wigner/PS relation.
    #[arg(long)]
    n: Option<usize>,
    /// Relative identity tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Eigen-equation residual tolerance.
    #[arg(long)]
    eigen_tol: Option<f64>,
    /// Eigenvalue grouping tolerance.
    #[arg(long)]
    group_tol: Option<f64>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    /// Cover radius override.
    #[arg(long)]
    radius: Option<usize>,
    /// Number of random symbols.
    #[arg(long)]
    symbols: Option<usize>,
    /// Report file (verify, spectrum) or output directory (analyze).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Perturb one resonant amplitude in the pairing suite.
    #[arg(long, hide = true)]
    inject_fault: Option<f64>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            graph: self.graph,
            suites: if self.suite.is_empty() { None } else { Some(self.suite) },
            depth: self.depth,
            n: self.n,
            identity_rel: self.tol,
            eigen_residual: self.eigen_tol,
            group_tol: self.group_tol,
            branch: self.branch.map(|b| match b {
                BranchArg::Principal => BranchPolicy::Principal,
                BranchArg::Both => BranchPolicy::Both,
            }),
            radius: self.radius,
            symbols: self.symbols,
            seed: self.seed,
            out: self.out,
            corrupt_amplitude: self.inject_fault,
        };
        Ok(base.overlay(flags))
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Spectrum(a) => commands::spectrum(&a.into_config()?),
        Command::Verify(a) => commands::verify(&a.into_config()?),
        Command::Analyze(a) => commands::analyze(&a.into_config()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

//! `yamabe`: invariants, threshold scans, Galerkin minimization and static
//! potential checks for squeezed sphere products.

// `!(x >= 1.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod report;
mod svg;

use clap::{Args, Parser, Subcommand};
use config::{Command, Format, Overrides, RunConfig};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "yamabe", version, about = "Yamabe-functional experiments on S^k × S^l")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Closed-form invariants and classification of one family member.
    Invariants(Flags),
    /// Sweep t and classify each point.
    Scan(Flags),
    /// Minimize the Yamabe quotient in the conformal class of h_t.
    Minimize(Flags),
    /// Static-potential checks on the critical family.
    StaticCheck(Flags),
}

#[derive(Args, Debug)]
struct Flags {
    /// Dimension of the unit sphere factor.
    #[arg(long)]
    k: Option<usize>,
    /// Dimension of the squeezed sphere factor.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long = "t-min")]
    t_min: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Largest harmonic degree per factor in the trial space.
    #[arg(long)]
    lmax: Option<u32>,
    /// Polynomial exactness of the quadrature grids (default 4·lmax).
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Add Galerkin minimizer estimates to a scan.
    #[arg(long)]
    with_minimizer: bool,
    /// File of `key = value` lines; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            k: self.k,
            l: self.l,
            t: self.t,
            t_min: self.t_min,
            t_max: self.t_max,
            steps: self.steps,
            l_max: self.lmax,
            degree: self.degree,
            restarts: self.restarts,
            seed: self.seed,
            tol: self.tol,
            out: self.out.clone(),
            format: self.format,
            with_minimizer: self.with_minimizer.then_some(true),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("YAMABE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("YAMABE_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let (command, flags) = match cli.command {
        Sub::Invariants(f) => (Command::Invariants, f),
        Sub::Scan(f) => (Command::Scan, f),
        Sub::Minimize(f) => (Command::Minimize, f),
        Sub::StaticCheck(f) => (Command::StaticCheck, f),
    };
    let file = match &flags.config {
        Some(path) => Overrides::read_file(path)?,
        None => Overrides::default(),
    };
    let cfg = RunConfig::resolve(command, file.layer(flags.overrides()))?;
    commands::run(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

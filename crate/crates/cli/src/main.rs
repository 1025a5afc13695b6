//! `gibbslab` command-line front end.
//!
//! Settings resolve in the order config file < environment < flag.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gibbslab::config::RunConfig;
use gibbslab::enumeration::DEFAULT_BUDGET;
use gibbslab::Error;

#[derive(Parser, Debug)]
#[command(name = "gibbslab", version, about = "Gibbs measures of interacting particles: sampling, rate functions, Laplace limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CommandKind {
    Sample,
    Minimize,
    Laplace,
    Concentration,
    Phi,
    Metrics,
    CheckAssumptions,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Sample => "sample",
            CommandKind::Minimize => "minimize",
            CommandKind::Laplace => "laplace",
            CommandKind::Concentration => "concentration",
            CommandKind::Phi => "phi",
            CommandKind::Metrics => "metrics",
            CommandKind::CheckAssumptions => "check-assumptions",
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metropolis sampling of the Gibbs law.
    Sample(RunArgs),
    /// Minimize a rate function on a grid.
    Minimize(RunArgs),
    /// Exact Laplace values against the rate-function reference.
    Laplace(RunArgs),
    /// Distance of sampled empirical measures to a target, across n.
    Concentration(RunArgs),
    /// Build the superlinear function phi for a law and check its moment bound.
    Phi(RunArgs),
    /// Distances between two discrete measures.
    Metrics(RunArgs),
    /// Sampled checks of the model assumptions.
    CheckAssumptions(RunArgs),
    /// List built-in potentials, schedules and metrics.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Run configuration (.toml or .json); a run manifest also works.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "GIBBSLAB_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "GIBBSLAB_OUT")]
    out: Option<PathBuf>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, env = "GIBBSLAB_THREADS")]
    threads: Option<usize>,
    /// Cap on enumerated configurations.
    #[arg(long, env = "GIBBSLAB_BUDGET")]
    budget: Option<u64>,
}

/// Fills seed, budget, threads and output directory into the config.
fn resolve(mut cfg: RunConfig, args: &RunArgs) -> RunConfig {
    cfg.seed = args.seed.or(cfg.seed).or(Some(0));
    cfg.budget = args.budget.or(cfg.budget).or(Some(DEFAULT_BUDGET));
    cfg.threads = args.threads.or(cfg.threads);
    cfg.out = args
        .out
        .as_ref()
        .map(|p| p.display().to_string())
        .or(cfg.out)
        .or_else(|| Some("gibbslab-out".into()));
    cfg
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Json(_) | Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } => 2,
        Error::Undefined { .. } | Error::AllInfinite(_) | Error::NoFiniteStart { .. } | Error::LinearProgram(_) => 3,
        Error::BudgetExceeded { .. } => 4,
        Error::Io(_) => 1,
    }
}

fn report(e: &Error) -> ExitCode {
    let field = match e {
        Error::Config { field, .. } => Some(field.clone()),
        Error::InvalidParameter { name, .. } => Some(name.clone()),
        _ => None,
    };
    let body = json!({ "error": { "kind": e.kind(), "field": field, "message": e.to_string() } });
    eprintln!("{body}");
    ExitCode::from(exit_code(e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Catalog { json } => {
            commands::catalog(json);
            return ExitCode::SUCCESS;
        }
        Command::Sample(a) => (CommandKind::Sample, a),
        Command::Minimize(a) => (CommandKind::Minimize, a),
        Command::Laplace(a) => (CommandKind::Laplace, a),
        Command::Concentration(a) => (CommandKind::Concentration, a),
        Command::Phi(a) => (CommandKind::Phi, a),
        Command::Metrics(a) => (CommandKind::Metrics, a),
        Command::CheckAssumptions(a) => (CommandKind::CheckAssumptions, a),
    };
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => resolve(c, &args),
        Err(Error::Io(e)) => {
            return report(&Error::Config {
                field: "--config".into(),
                reason: format!("{}: {e}", args.config.display()),
            })
        }
        Err(e) => return report(&e),
    };
    match commands::run(kind.name(), &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

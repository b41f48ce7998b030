use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::{Outcome, PolicyArgs};

/// Steady Stokes waves: solve, dump fields, verify pressure bounds.
#[derive(Debug, Parser)]
#[command(name = "stokes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct PolicyFlags {
    /// Excision radius around the crest, conformal units.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Slack required by strict sign conditions.
    #[arg(long)]
    margin: Option<f64>,
}

impl From<&PolicyFlags> for PolicyArgs {
    fn from(f: &PolicyFlags) -> Self {
        PolicyArgs {
            epsilon: f.epsilon,
            margin: f.margin,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continue from flat water to the configured target.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continuation log, JSON lines. Defaults to `<out>.log.jsonl`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Write field samples of a stored state as CSV.
    Fields {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = config::parse_grid, value_name = "NxM")]
        grid: Option<(usize, usize)>,
    },
    /// Run every pressure and flow check on a stored state.
    Verify {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Physical parameters. Without it: g = 1, P0 = 0, d from the state.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyFlags,
        #[arg(long, value_parser = config::parse_grid, value_name = "NxM")]
        grid: Option<(usize, usize)>,
    },
    /// Solve and verify every member of a family into a directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        policy: PolicyFlags,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { config, out, log } => commands::solve(config, out, log.as_deref()),
        Command::Fields { state, out, grid } => commands::fields(state, *grid, out),
        Command::Verify {
            state,
            out,
            config,
            policy,
            grid,
        } => commands::verify(state, config.as_deref(), policy.into(), *grid, out),
        Command::Sweep {
            config,
            out,
            policy,
        } => commands::sweep(config, out, policy.into()),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::NonConvergence) => ExitCode::from(2),
        Ok(Outcome::VerificationFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

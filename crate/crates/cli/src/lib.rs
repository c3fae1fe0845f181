//! Command-line driver for thermocap-core: configuration files, run
//! orchestration, output files and the verification suite.

pub mod commands;
pub mod config;
pub mod oracles;
pub mod output;
pub mod references;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use commands::{cmd_convergence, cmd_run, cmd_twin, CommandError, EXIT_OK, EXIT_SOLVER, EXIT_USAGE};
use config::parse_config;

#[derive(Debug, Parser)]
#[command(name = "thermocap", version, about = "Two-phase flow with thermocapillary effects on a staggered grid")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configuration, writing ledger.csv and snapshots.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite, or the run-level checks for one configuration.
    Verify {
        config: Option<PathBuf>,
        /// Only these criteria (repeatable).
        #[arg(long = "only")]
        only: Vec<usize>,
    },
    /// Temporal self-convergence over h, h/2, h/4 against h/8.
    Convergence { config: PathBuf },
    /// Distance between a base run and runs perturbed by eps and eps/2.
    Twin {
        config: PathBuf,
        #[arg(long)]
        eps: f64,
    },
}

/// Exit code for a command error, printing it to stderr.
fn report(e: &anyhow::Error) -> i32 {
    eprintln!("error: {e:#}");
    match e.downcast_ref::<CommandError>() {
        Some(CommandError::Core(c)) => commands::exit_code_for_setup(c),
        Some(CommandError::Failed(_)) => EXIT_SOLVER,
        _ => EXIT_USAGE,
    }
}

fn json<T: serde::Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = parse_config(&config).map_err(CommandError::from)?;
            let s = cmd_run(&cfg, out.as_deref()).with_context(|| format!("running {}", config.display()))?;
            let rows = s.outcome.ledger.len();
            eprintln!("wrote {} ({rows} rows) and {} snapshot files", s.ledger_path.display(), s.snapshots.len());
            if let Some(e) = &s.outcome.failure {
                eprintln!("run stopped: {e}");
            }
            Ok(s.exit_code())
        }
        Command::Verify { config: Some(path), .. } => {
            let cfg = parse_config(&path).map_err(CommandError::from)?;
            let summary = verify::verify_config(&cfg);
            for c in &summary.criteria {
                eprintln!("{}", c.line());
            }
            json(&summary)?;
            Ok(if summary.passed { EXIT_OK } else { EXIT_SOLVER })
        }
        Command::Verify { config: None, only } => {
            let ids: Vec<usize> = if only.is_empty() {
                verify::CRITERIA.iter().map(|(k, _)| *k).collect()
            } else {
                only
            };
            let summary = verify::verify_all(&ids, verify::threads_from_env());
            for c in &summary.criteria {
                eprintln!("{}", c.line());
            }
            json(&summary)?;
            Ok(if summary.passed { EXIT_OK } else { EXIT_SOLVER })
        }
        Command::Convergence { config } => {
            let cfg = parse_config(&config).map_err(CommandError::from)?;
            json(&cmd_convergence(&cfg)?)?;
            Ok(EXIT_OK)
        }
        Command::Twin { config, eps } => {
            let cfg = parse_config(&config).map_err(CommandError::from)?;
            json(&cmd_twin(&cfg, eps)?)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    dispatch(cli).unwrap_or_else(|e| report(&e))
}

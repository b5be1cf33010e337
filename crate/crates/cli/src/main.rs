//! `relayopt`: runs the relay sum-rate solvers from a JSON experiment file
//! and writes CSV.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;
use run::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "relayopt",
    version,
    about = "Sum-rate optimization for relays with finite backhaul"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One row per requested scheme.
    Solve(Common),
    /// One row per sweep point and scheme.
    Sweep(Common),
    /// Compare the hybrid solver with an exhaustive grid search.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Grid intervals per dimension.
        #[arg(long, default_value_t = relayopt::oracle::DEFAULT_GRID_POINTS)]
        grid_points: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment file.
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; overrides the config's `output`, defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the randomized initial points; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Fill the wall_time_s column (makes the output run-dependent).
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, Option<PathBuf>, Settings), CliError> {
        let exp = ExperimentConfig::load(&self.config)?;
        let out = self.out.clone().or_else(|| exp.output.clone());
        let settings = Settings {
            seed: self.seed.unwrap_or(exp.seed),
            timing: self.timing,
        };
        Ok((exp, out, settings))
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Solve(c) => {
            let (exp, out, settings) = c.load()?;
            run::cmd_solve(&exp, out.as_deref(), &settings).map(|_| true)
        }
        Command::Sweep(c) => {
            let (exp, out, settings) = c.load()?;
            run::cmd_sweep(&exp, out.as_deref(), &settings).map(|_| true)
        }
        Command::Oracle { common, grid_points } => {
            let (exp, out, settings) = common.load()?;
            let ok = run::cmd_oracle(&exp, out.as_deref(), grid_points, &settings)?;
            if !ok {
                eprintln!(
                    "relayopt: hybrid rate below the oracle by more than {}",
                    run::oracle_tolerance(exp.gains_db.len())
                );
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("relayopt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

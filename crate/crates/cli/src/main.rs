//! `deeptriangle` command line tool.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error, 3 training
//! error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "deeptriangle",
    version,
    about = "DeepTriangle loss reserving runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read the input files and write triangle dumps and summaries.
    Ingest(Common),
    /// Train one ensemble per line of business.
    Train(Common),
    /// Forecast every open cell with the trained ensembles.
    Forecast(Common),
    /// Score the ensembles and the chain ladder against held-out actuals.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Evaluate this forecast CSV instead of the trained ensemble.
        #[arg(long, value_name = "PATH")]
        forecast: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Restrict the run to one configured line of business.
    #[arg(long, value_name = "NAME")]
    line: Option<String>,
    #[arg(long, value_name = "N")]
    ensemble_size: Option<usize>,
    /// Maximum number of ensemble members trained at once.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, command: &str) -> Result<RunConfig, CliError> {
        let overrides = Overrides {
            line: self.line.clone(),
            ensemble_size: self.ensemble_size,
            jobs: self.jobs,
            seed: self.seed,
            output: self.output.clone(),
        };
        let config = RunConfig::load(&self.config)?.resolve(&overrides)?;
        commands::echo_config(&config, command)?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(c) => commands::ingest(&c.resolve("ingest")?),
        Command::Train(c) => commands::train(&c.resolve("train")?),
        Command::Forecast(c) => commands::forecast(&c.resolve("forecast")?),
        Command::Evaluate { common, forecast } => {
            commands::evaluate(&common.resolve("evaluate")?, forecast.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

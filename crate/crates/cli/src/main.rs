//! `stochdom`: run dominance experiments and compare sample files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stochdom_cli::config::{self, ExperimentConfig};
use stochdom_cli::error::CliError;
use stochdom_cli::{compare, runner};

#[derive(Parser)]
#[command(
    name = "stochdom",
    version,
    about = "Learning with stochastic dominance: experiments and comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, seed) pair of an experiment config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of runs executed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Dominance gaps between two sample files (one value per line).
    Compare {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        k: u8,
        /// Gaps at or below this count as "no worse".
        #[arg(long, default_value_t = config::default_tol())]
        tol: f64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print the config with all defaults and generated specs filled in.
    DumpSpec { config: PathBuf },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let offset = runner::seed_offset()?;
            let runner = runner::Runner::new(cfg, out, jobs, offset);
            runner.run()?;
            eprintln!("wrote {}", runner.out_dir().display());
            Ok(())
        }
        Command::Compare {
            x,
            y,
            a,
            b,
            k,
            tol,
            json,
        } => {
            let xs = compare::read_samples(&x)?;
            let ys = compare::read_samples(&y)?;
            let report = compare::compare(&xs, &ys, a, b, k, tol)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report)
                        .map_err(|e| CliError::Run(e.to_string()))?
                );
            } else {
                println!("{report}");
            }
            Ok(())
        }
        Command::DumpSpec { config } => {
            let cfg = ExperimentConfig::load(&config)?.resolved()?;
            println!(
                "{}",
                serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Run(e.to_string()))?
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stochdom: {e}");
            e.exit_code()
        }
    }
}

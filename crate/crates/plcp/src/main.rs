use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use plcp::artifacts::{load, run_to_dir};
use plcp::config::Config;
use plcp::experiment::{Engines, Experiment};

#[derive(Parser)]
#[command(name = "plcp", version, about = "Coverage of road-deployed multi-RAT small-cell networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config or a previous manifest.
    Run {
        config: PathBuf,
        /// Master seed, at most 2^63 - 1 so it fits a TOML integer.
        #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
        seed: Option<u64>,
        /// Monte Carlo trials per simulated point.
        #[arg(long)]
        trials: Option<u64>,
        /// Output directory; defaults to the config's `output` or `out/<experiment>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Analytic engine only.
        #[arg(long, conflicts_with = "no_analytic")]
        no_sim: bool,
        /// Simulator only.
        #[arg(long)]
        no_analytic: bool,
    },
    /// Parse a config and report every problem.
    Validate { config: PathBuf },
    /// List the named experiments.
    ListExperiments,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn warn(config: &Config) {
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<26} {}", e.name(), e.description());
            }
        }
        Command::Validate { config } => {
            let (config, _) = load(&config)?;
            warn(&config);
            print!("{}", config.to_toml());
        }
        Command::Run { config, seed, trials, out, no_sim, no_analytic } => {
            let (mut config, recorded) = load(&config)?;
            warn(&config);
            if let Some(s) = seed {
                config.seed = s;
            }
            if trials.is_some() {
                config.trials = trials;
            }
            let mut engines = recorded.unwrap_or_default();
            if no_sim {
                engines = Engines { analytic: true, simulate: false };
            }
            if no_analytic {
                engines = Engines { analytic: false, simulate: true };
            }
            let dir = out
                .or_else(|| config.output.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(config.experiment.name()));
            config.output = Some(dir.clone());
            let written = run_to_dir(&config, engines, &dir)?;
            for n in &written.notes {
                eprintln!("note: {n}");
            }
            println!("{}", written.csv.display());
            println!("{}", written.svg.display());
            println!("{}", written.manifest.display());
        }
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use piece::experiment::{write_outputs, Experiment, ExperimentError};
use piece::presets::Preset;

#[derive(Parser)]
#[command(name = "piece", version, about = "Adaptive minimum-variance control experiments for ARX plants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-algorithm CSV files and summary.json
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep every N-th step in the CSV files
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        stride: u64,
        /// Worker threads (default: all cores)
        #[arg(long, env = "PIECE_JOBS", value_parser = clap::value_parser!(u64).range(1..))]
        jobs: Option<u64>,
    },
    /// Print the solved hyper-parameters without simulating
    Hyperparams { config: PathBuf },
    /// List the built-in plants
    Presets,
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Run { config, out, stride, jobs } => {
            let exp = Experiment::load(&config)?;
            println!("fingerprint {}", exp.fingerprint);
            let batches = exp.run(jobs.map(|j| j as usize));
            let files = write_outputs(&out, &exp, &batches, stride as usize)?;
            for b in &batches {
                let a = &b.aggregate;
                let mean = a.mean_terminal_regret.map_or("n/a".to_string(), |m| format!("{m:.6e}"));
                println!(
                    "{:<7} mean terminal regret {mean}  divergences {}/{}",
                    a.algorithm.name(),
                    a.divergences,
                    a.n_runs
                );
            }
            println!("wrote {} CSV files and {}", files.csv.len(), files.summary.display());
        }
        Command::Hyperparams { config } => {
            let exp = Experiment::load(&config)?;
            println!("{}", exp.hyper_report()?);
        }
        Command::Presets => {
            for p in Preset::ALL {
                let (a, b) = p.coefficients();
                println!("{:<9} p = {}, q = {}  a = {a:?}  b = {b:?}", p.name(), a.len(), b.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `maglev`: run experiment scenarios and inspect their reports.
//!
//! Exit codes: 0 success, 2 usage error, 3 unreadable config, 4 invalid
//! config, 5 physics/numerical failure, 6 fit failure, 7 output write
//! failure, 8 unreadable or incompatible report.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use maglev::analysis::AnalysisReport;
use maglev::scenario::{self, ScenarioError};

#[derive(Parser)]
#[command(name = "maglev", version, about = "Levitated microsphere simulation and analysis")]
struct Cli {
    /// Suppress the summary printed after a run.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's output_dir, else out/<stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config and list every problem without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the summary of an existing report.json.
    Report {
        /// A report.json or a run directory containing one.
        path: PathBuf,
    },
    /// Run several configs, each into <out>/<config stem>.
    Sweep {
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn fail(e: &ScenarioError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => match scenario::run_scenario(&config, out.as_deref(), seed) {
            Ok((dir, report)) => {
                if !cli.quiet {
                    print!("{}", report.summary());
                    println!("outputs in {}", dir.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Validate { config } => match scenario::load_config(&config) {
            Ok((cfg, _)) => {
                if !cli.quiet {
                    println!("{}: ok ({}, config hash {})", config.display(), cfg.scenario.name(), cfg.hash());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Report { path } => {
            let file = if path.is_dir() { path.join("report.json") } else { path };
            match AnalysisReport::read(&file) {
                Ok(r) => {
                    print!("{}", r.summary());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&ScenarioError::Report(e)),
            }
        }
        Command::Sweep { config, out, seed } => {
            let mut worst = 0;
            for (path, result) in scenario::sweep(&config, &out, seed) {
                match result {
                    Ok((dir, _)) => {
                        if !cli.quiet {
                            println!("{}: ok -> {}", path.display(), dir.display());
                        }
                    }
                    Err(e) => {
                        eprintln!("{}: error: {e}", path.display());
                        worst = worst.max(e.exit_code());
                    }
                }
            }
            ExitCode::from(worst as u8)
        }
    }
}

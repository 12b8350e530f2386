use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recoil_diffusion::cli::{self, CompareOptions};

#[derive(Parser)]
#[command(version, about = "Standard and recoil diffusion: scenario runner and run comparison")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV, summary and manifest files.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override a scenario entry, e.g. `--set params.D=0.25`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Compare one column of two runs (CSV files or run directories).
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long)]
        tol: f64,
        /// Use relative instead of absolute differences.
        #[arg(long)]
        relative: bool,
        /// Tolerance is `tol` times the sum of both files' values in this standard-error column.
        #[arg(long, value_name = "COLUMN")]
        se: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Args::parse().command {
        Command::Run { scenario, out, overrides } => match cli::run(&scenario, &out, &overrides) {
            Ok(manifest) => {
                for f in &manifest.outputs {
                    println!("{}", out.join(f).display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Compare { a, b, column, tol, relative, se } => {
            let options = CompareOptions { column, tolerance: tol, relative, se_column: se };
            match cli::compare(&a, &b, &options) {
                Ok(reports) => {
                    for r in &reports {
                        println!("{r}");
                    }
                    if reports.iter().all(|r| r.passed()) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}

//! `qkinet run <config>`: execute one experiment from a config file and
//! persist its result table.
//!
//! Exit codes: 0 all tolerances held, 1 a tolerance failed, 2 config or I/O
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qkinet_cli::{run_to_files, OutputFormat};

#[derive(Parser)]
#[command(name = "qkinet", version, about = "BBGKY / quantum kinetic equation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config and write its result table.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Restrict output to one format (default: both).
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Worker-thread cap (overrides QKINET_THREADS; informational for
        /// single-threaded experiments).
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn thread_cap(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("QKINET_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, format, threads } => {
            if let Some(k) = thread_cap(threads) {
                // Experiments are deterministic and single-threaded; the cap
                // is recorded for tooling that shells out to BLAS.
                std::env::set_var("OPENBLAS_NUM_THREADS", k.to_string());
                std::env::set_var("OMP_NUM_THREADS", k.to_string());
            }
            let text = match std::fs::read_to_string(&config) {
                Ok(text) => text,
                Err(err) => {
                    eprintln!("error: cannot read config {}: {err}", config.display());
                    return ExitCode::from(2);
                }
            };
            let format = match format {
                None => OutputFormat::Both,
                Some(Format::Csv) => OutputFormat::Csv,
                Some(Format::Json) => OutputFormat::Json,
            };
            match run_to_files(&text, &out, format) {
                Ok(report) => {
                    for path in &report.written {
                        println!("wrote {}", path.display());
                    }
                    if report.passed {
                        println!("all tolerances held");
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("tolerance failure (see result table)");
                        ExitCode::from(1)
                    }
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::from(2)
                }
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use minmove::harness::{run_file, summarize, RunOptions};

#[derive(Parser)]
#[command(name = "minmove", about = "Run minimizing-movement experiments and summarise their artifacts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override `experiment.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tighten tolerance thresholds by a factor of 10.
        #[arg(long)]
        strict: bool,
    },
    /// Summarise the artifacts in a run directory.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out, strict } => {
            let opts = RunOptions { seed, out, strict };
            match run_file(&config, &opts) {
                Ok(summary) => {
                    for e in summary.report.entries.iter().filter(|e| !e.passed) {
                        eprintln!("failed: {} = {:e} (bound {:e})", e.name, e.value, e.threshold);
                    }
                    if let Some(err) = &summary.runtime_error {
                        eprintln!("runtime error: {err}");
                    }
                    println!(
                        "{} properties, {} failed; artifacts in {}",
                        summary.report.entries.len(),
                        summary.report.entries.iter().filter(|e| !e.passed).count(),
                        summary.out_dir.display()
                    );
                    ExitCode::from(summary.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Report { dir } => match summarize(&dir) {
            Ok(s) => {
                print!("{}", s.render());
                ExitCode::from(s.exit_code() as u8)
            }
            Err(e) => {
                eprintln!("{}: {e}", dir.display());
                ExitCode::from(2)
            }
        },
    }
}

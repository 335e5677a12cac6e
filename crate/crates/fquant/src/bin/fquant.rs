//! Experiment runner CLI: `fquant run <config.toml>` executes one
//! experiment and writes its artifacts; `fquant check <config.toml>`
//! evaluates the embedded thresholds and exits nonzero on failure.
//!
//! Exit codes: 0 success, 2 invalid config, 3 runtime error, 4 threshold
//! violation.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use fquant::config::ExperimentConfig;
use fquant::runner::{check_experiment, run_experiment};
use fquant::Error;

#[derive(Parser)]
#[command(name = "fquant", version, about = "Functional quantization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: FQUANT_THREADS or all cores). Outputs do
    /// not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config and write CSVs, quantizers and a
    /// manifest.
    Run {
        /// Experiment config (TOML).
        config: PathBuf,
        /// Output directory (defaults to the config's out_dir, then
        /// ./fquant-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump the first few evaluation paths as t,value CSVs.
        #[arg(long)]
        dump_paths: bool,
    },
    /// Evaluate the config's experiment against embedded thresholds.
    Check {
        /// Experiment config (TOML).
        config: PathBuf,
    },
}

fn init_threads(cli_threads: Option<usize>) {
    let threads = cli_threads
        .or_else(|| std::env::var("FQUANT_THREADS").ok().and_then(|s| s.parse::<usize>().ok()));
    if let Some(n) = threads {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load_config(path: &PathBuf) -> Result<(ExperimentConfig, String), ExitCode> {
    match ExperimentConfig::from_file(path) {
        Ok(pair) => Ok(pair),
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(2))
        }
    }
}

fn runtime_exit(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Parse { .. } => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match cli.command {
        Command::Run { config, out, dump_paths } => {
            let (cfg, echo) = match load_config(&config) {
                Ok(v) => v,
                Err(code) => return code,
            };
            let out_dir = out
                .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("fquant-out"));
            match run_experiment(&cfg, &echo, &out_dir, dump_paths) {
                Ok(output) => {
                    println!("wrote {} files under {}", output.files.len(), out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => runtime_exit(e),
            }
        }
        Command::Check { config } => {
            let (cfg, _) = match load_config(&config) {
                Ok(v) => v,
                Err(code) => return code,
            };
            match check_experiment(&cfg) {
                Ok(rows) => {
                    let mut all_pass = true;
                    for row in &rows {
                        let verdict = if row.pass { "PASS" } else { "FAIL" };
                        println!("{verdict}  {}  ({})", row.name, row.detail);
                        all_pass &= row.pass;
                    }
                    if all_pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(4)
                    }
                }
                Err(e) => runtime_exit(e),
            }
        }
    }
}

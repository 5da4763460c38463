//! `svmheur`: run heuristic-vs-grid-search experiments, estimate SVM
//! parameters for a single file, or print its zero-rule accuracy.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use svm_heuristics::{DataFormat, HeuristicId, LabelColumn};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

const OUTPUT_DIR_ENV: &str = "SVMHEUR_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "svmheur", version, about = "Heuristic RBF-SVM parameter selection benchmark")]
struct Cli {
    /// Seed for sampling and fold assignment (overrides `base_seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Directory for report files. Falls back to the config's `output_dir`,
    /// then `$SVMHEUR_OUTPUT_DIR`, then `results`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Print the (C, gamma) a heuristic picks for a whole dataset.
    Estimate {
        path: PathBuf,
        #[arg(long)]
        format: Option<DataFormat>,
        #[arg(long)]
        heuristic: HeuristicId,
        /// CSV label column: `last` or a zero-based index.
        #[arg(long, default_value = "last")]
        label_column: LabelColumn,
    },
    /// Print the accuracy of always predicting the most frequent class.
    ZeroRule {
        path: PathBuf,
        #[arg(long)]
        format: Option<DataFormat>,
        #[arg(long, default_value = "last")]
        label_column: LabelColumn,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    }
    match cli.command {
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = cli.seed {
                cfg.cv.base_seed = seed;
            }
            let output_dir = cli
                .output_dir
                .or_else(|| cfg.output_dir.clone())
                .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("results"));
            for path in commands::run(&cfg, &output_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Estimate { path, format, heuristic, label_column } => {
            let dataset = commands::load(&path, format, label_column)?;
            println!("{}", commands::estimate_params(&dataset, heuristic, cli.seed.unwrap_or(0))?);
        }
        Command::ZeroRule { path, format, label_column } => {
            println!("{}", commands::zero_rule(&commands::load(&path, format, label_column)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = match e.kind() {
                clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => "missing subcommand; see `svmheur --help`",
                _ => text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: "),
            };
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.code());
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ma_harness::config::Overrides;
use ma_harness::{run_experiment, validate_config, ConfigError, RunOptions};

/// Movable-antenna experiment runner.
#[derive(Debug, Parser)]
#[command(name = "masim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its CSV tables and summary.json.
    Run(RunArgs),
    /// Check a config and list every violated constraint.
    Validate {
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the trial count (Monte Carlo trials or MIMO seeds).
    #[arg(long, allow_negative_numbers = true)]
    trials: Option<i64>,
    /// Output directory (default: config `output`, then $MASIM_OUTPUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match validate_config(&config) {
            Ok(cfg) => {
                println!("{}: valid {} experiment", config.display(), cfg.experiment.kind());
                ExitCode::SUCCESS
            }
            Err(e) => {
                report_config_error(&e);
                ExitCode::from(2)
            }
        },
        Command::Run(args) => {
            let opts = RunOptions {
                overrides: Overrides {
                    seed: args.seed,
                    trials: args.trials,
                },
                out: args.out,
                threads: args.threads,
            };
            match run_experiment(&args.config, &opts) {
                Ok(report) => {
                    for f in &report.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    match &e {
                        ma_harness::RunError::Config(c) => report_config_error(c),
                        other => eprintln!("error: {other}"),
                    }
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}

fn report_config_error(e: &ConfigError) {
    match e {
        ConfigError::Unreadable { .. } => eprintln!("error: {e}"),
        ConfigError::Parse { .. } => eprintln!("error: {e}"),
        ConfigError::Invalid(v) => {
            eprintln!("error: {} invalid field(s)", v.len());
            for x in v {
                eprintln!("  {x}");
            }
        }
    }
}

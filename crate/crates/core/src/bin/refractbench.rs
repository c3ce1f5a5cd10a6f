use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use refractbench::config::{Method, RunConfig};
use refractbench::pipeline::Pipeline;
use refractbench::{Error, Result};

/// Refractive water-surface distortion benchmark.
///
/// Without --output, results go to $REFRACTBENCH_OUTPUT, else ./refractbench-out.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overriding the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output root, overriding the config and the environment.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit severity and speed settings per wave type and level.
    Calibrate,
    /// Render the dataset from a stored calibration.
    Generate,
    /// Run restoration methods on the benchmark sequences.
    Restore {
        /// Method to run (repeatable); defaults to the configured list.
        #[arg(long = "method")]
        methods: Vec<String>,
    },
    /// Score predictions and write report.csv and the tables.
    Evaluate,
    /// Rebuild and print the tables from report.csv.
    Report,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if cli.output.is_some() {
        cfg.output = cli.output;
    }
    let pipeline = Pipeline::new(cfg)?;
    match cli.command {
        Command::Calibrate => {
            let file = pipeline.calibrate()?;
            for r in &file.records {
                println!(
                    "{:<14} {:<8} s {:>9.5}  std {:.6} (target {:.3})  speed x{:.4}",
                    r.wave_type.name(),
                    r.level.name(),
                    r.s,
                    r.achieved_std,
                    r.target_std,
                    r.speed_multiplier
                );
            }
        }
        Command::Generate => {
            let (index, summary) = pipeline.generate()?;
            println!(
                "{} sequences ({} rendered, {} reused), {} in the benchmark subset",
                index.sequences.len(),
                summary.written,
                summary.skipped,
                index.benchmark_subset.len()
            );
        }
        Command::Restore { methods } => {
            let methods = if methods.is_empty() {
                pipeline.config().methods.clone()
            } else {
                methods.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>>>()?
            };
            let summary = pipeline.restore(&methods)?;
            println!("{} outputs written, {} up to date", summary.written, summary.skipped);
        }
        Command::Evaluate => {
            let rows = pipeline.evaluate()?;
            println!("{} rows written to {}", rows.len(), pipeline.root().join("report.csv").display());
        }
        Command::Report => print!("{}", pipeline.report()?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &Error) -> u8 {
    u8::try_from(e.exit_code()).unwrap_or(1)
}

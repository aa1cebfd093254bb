use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::{info, LevelFilter};
use openwindow::Interpolation;
use openwindow_cli::{run, CliError, Command, RunConfig};

/// Solve the open-sourcing model and write CSV tables for its figures.
#[derive(Debug, Parser)]
#[command(name = "openwindow", version)]
struct Args {
    /// TOML run configuration; baseline values when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// What to run; overrides `[run] command`.
    #[arg(long, value_enum, value_name = "NAME")]
    command: Option<Command>,
    /// Assert that the run uses no randomness (recorded in the manifest).
    #[arg(long)]
    seedless: bool,
    /// Read continuation values at the nearest grid node instead of interpolating.
    #[arg(long)]
    nearest_node: bool,
    /// Log progress to stderr.
    #[arg(short, long)]
    verbose: bool,
}

fn resolve(args: &Args) -> Result<(Command, RunConfig, PathBuf), CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if args.nearest_node {
        config.solver.interpolation = Interpolation::Nearest;
    }
    if args.seedless {
        // Nothing in the solver draws random numbers; the flag only records that.
        config.run.seedless = true;
    }
    let command = args
        .command
        .or(config.run.command)
        .ok_or_else(|| CliError::Config("no command given (use --command or [run] command)".to_string()))?;
    if let Some(out) = &args.out {
        config.output.dir = Some(out.clone());
    }
    let out = config
        .output
        .dir
        .clone()
        .ok_or_else(|| CliError::Config("no output directory given (use --out or [output] dir)".to_string()))?;
    Ok((command, config, out))
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(if args.verbose {
            LevelFilter::Info
        } else {
            LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    let result = resolve(&args).and_then(|(command, config, out)| {
        info!("running {} into {}", command.name(), out.display());
        run(command, &config, &out)
    });
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("openwindow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

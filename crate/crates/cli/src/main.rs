//! `hyperrcm`: simulation, rendering and numerical evaluators for random
//! connection models on hyperbolic space.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 invalid input, 3 numerical failure.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Format};
use config::Failure;

#[derive(Parser)]
#[command(name = "hyperrcm", version, about = "Random connection models on hyperbolic space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample a configuration; writes JSON (or CSV) and, for d = 2, an SVG.
    Simulate,
    /// Draw a saved d = 2 configuration.
    Render,
    /// Diagram report for an adjacency profile.
    Diagrams,
    /// Critical-intensity expansion terms.
    Expansion,
    /// Monte Carlo estimate of the critical intensity.
    Estimate,
    /// Spherical transform and convolution utilities.
    Transform,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let Some(config) = cli.config else {
        return config::invalid("--config PATH is required");
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return config::invalid("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    let ctx = Ctx { config, seed: cli.seed, out: cli.out, format: cli.format };
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Render => commands::render(&ctx),
        Command::Diagrams => commands::diagrams(&ctx),
        Command::Expansion => commands::expansion(&ctx),
        Command::Estimate => commands::estimate(&ctx),
        Command::Transform => commands::transform(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use netstab::config::{ConfigOverrides, RunConfig};
use netstab::pipeline::{run, Mode};
use netstab::Result;

/// Top-k centrality stability under random edge additions.
#[derive(Parser)]
#[command(name = "netstab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Basic graph statistics.
    Stats(ConfigOverrides),
    /// Simulate noise and measure top-k Jaccard stability.
    Stability(ConfigOverrides),
    /// Predict stability from the original graph alone.
    Predict(ConfigOverrides),
    /// Predict, simulate, and compare.
    Validate(ConfigOverrides),
    /// Exact betweenness change decomposition and realized gap certificates.
    Decompose(ConfigOverrides),
}

fn execute(cli: Cli) -> Result<()> {
    let (mode, flags) = match cli.command {
        Command::Stats(f) => (Mode::Stats, f),
        Command::Stability(f) => (Mode::Stability, f),
        Command::Predict(f) => (Mode::Predict, f),
        Command::Validate(f) => (Mode::Validate, f),
        Command::Decompose(f) => (Mode::Decompose, f),
    };
    let cfg = RunConfig::resolve(&flags)?;
    let reports = run(mode, &cfg)?;
    if mode == Mode::Stats {
        for r in &reports {
            println!("{}\t{}", r.network, serde_json::to_string(&r.stats)?);
        }
    } else {
        eprintln!("wrote {} report(s) to {}", reports.len(), cfg.out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

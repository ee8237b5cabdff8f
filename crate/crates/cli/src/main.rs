#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod svg;

use commands::{Context, Failure};
use config::{Overrides, RunConfig};

/// Invert the additive shift operator v -> v o Phi - v for Phi(t) = t + alpha phi(t).
#[derive(Parser, Debug)]
#[command(name = "shiftinv", version)]
struct Cli {
    /// TOML run configuration; built-in defaults are used without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Jet / smoothness order.
    #[arg(long, global = true)]
    p: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Constant ladder, trapezoid check and optional alpha scaling table.
    Constants,
    /// Solve v o Phi - v = w for the configured source.
    Solve,
    /// Solve a telescoped source and compare against the known v0.
    Roundtrip,
    /// Orbit of t0 under Phi.
    Orbit,
    /// Build a kernel element and its endpoint oscillation profile.
    Kernel,
    /// Propagate jets and report contraction and the C^p bound.
    Jets,
    /// Gram matrix of the pulled-back sine modes.
    Gram {
        #[arg(long)]
        modes: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ov = Overrides {
        alpha: cli.alpha,
        delta: cli.delta,
        p: cli.p,
        tol: cli.tol,
        out: cli.out,
        plots: cli.plot,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &ov)
        .map_err(|e| Failure::validation(e.to_string()))?;
    let map = cfg
        .validate()
        .map_err(|e| Failure::validation(e.to_string()))?;
    let ctx = Context { cfg, map };
    match cli.command {
        Command::Constants => commands::constants(&ctx),
        Command::Solve => commands::solve(&ctx),
        Command::Roundtrip => commands::roundtrip(&ctx),
        Command::Orbit => commands::orbit(&ctx),
        Command::Kernel => commands::kernel(&ctx),
        Command::Jets => commands::jets(&ctx),
        Command::Gram { modes } => commands::gram(&ctx, modes),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

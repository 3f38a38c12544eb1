// SPDX-License-Identifier: Apache-2.0
//! `oumap`: quantize, analyze, map, simulate and cost weight matrices on
//! bit-sliced crossbar Operation Units.
//!
//! Exit status: 0 on success, 2 for invalid configuration or mismatched
//! inputs, 3 for file-system errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oumap::plan::Direction;
use oumap::reorder::MappingStrategy;

use config::{ConfigFile, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "oumap", version, about = "Map sparse int8 weight matrices onto crossbar Operation Units")]
struct Cli {
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: config `jobs`, else all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Geometry and mapping flags shared by the mapping subcommands.
#[derive(Debug, Clone, Args)]
struct MappingArgs {
    /// Crossbar rows (default 128).
    #[arg(long)]
    crossbar_rows: Option<usize>,
    /// Crossbar columns (default 128).
    #[arg(long)]
    crossbar_cols: Option<usize>,
    /// Rows activated per OU (default 7).
    #[arg(long)]
    ou_height: Option<usize>,
    /// Columns read per OU (default 8).
    #[arg(long)]
    ou_width: Option<usize>,
    /// Mapping strategy: naive, zero-skip or similarity (default similarity).
    #[arg(long)]
    strategy: Option<MappingStrategy>,
    /// Scheduling direction: horizontal or vertical.
    #[arg(long)]
    direction: Option<Direction>,
    /// Strategy the mapping is compared against: naive or zero-skip (default zero-skip).
    #[arg(long)]
    baseline: Option<MappingStrategy>,
    /// Seed for synthetic data (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Power table overriding the default component powers (`key = value`, mW and GHz).
    #[arg(long, value_name = "FILE")]
    power_table: Option<PathBuf>,
}

impl MappingArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            crossbar_rows: self.crossbar_rows,
            crossbar_cols: self.crossbar_cols,
            ou_height: self.ou_height,
            ou_width: self.ou_width,
            direction: self.direction,
            strategy: self.strategy,
            baseline: self.baseline,
            seed: self.seed,
            power_table: self.power_table.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prune and quantize a float tensor (or a synthetic one) to an int8 weight matrix.
    Quantize(commands::QuantizeArgs),
    /// Identical-row probability grid (closed form vs Monte-Carlo) and zero-bit ratios.
    Analyze(commands::AnalyzeArgs),
    /// Map an int8 weight matrix onto OUs and write the crossbar plan.
    Reorder(commands::ReorderArgs),
    /// Run activations through a plan, cycle by cycle.
    Simulate(commands::SimulateArgs),
    /// Full cost report: JSON, CSV curves and a text summary.
    Report(commands::ReportArgs),
    /// Compression ratio over OU heights, or improvement over sparsity.
    Sweep(commands::SweepArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>().is_some()
            || e.downcast_ref::<tempfile::PersistError>().is_some()
            || matches!(e.downcast_ref::<oumap::Error>(), Some(oumap::Error::Io(_)))
    });
    if io {
        3
    } else {
        2
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::read(path)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = cli.jobs.or(file.jobs) {
        if n == 0 {
            anyhow::bail!(config::ConfigError("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let resolve = |m: &MappingArgs| RunConfig::resolve(&file, &m.overrides());
    match cli.command {
        Command::Quantize(a) => commands::quantize(&a, &resolve(&a.mapping)?),
        Command::Analyze(a) => commands::analyze(&a, &resolve(&a.mapping)?),
        Command::Reorder(a) => commands::reorder(&a, &resolve(&a.mapping)?),
        Command::Simulate(a) => commands::simulate(&a, &resolve(&a.mapping)?),
        Command::Report(a) => commands::report(&a, &resolve(&a.mapping)?),
        Command::Sweep(a) => commands::sweep(&a, &resolve(&a.mapping)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

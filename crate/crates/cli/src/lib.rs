//! Command-line driver for `femtosim`.
//!
//! Exit codes: 0 success, 2 malformed or unknown configuration, 3 runtime
//! failure, 4 refusal to overwrite existing results, 5 missing config file,
//! 6 out-of-range configuration value.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::FileConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("malformed configuration: {0}")]
    Malformed(String),
    #[error("config file not readable: {0}")]
    MissingFile(String),
    #[error("configuration value out of range: {0}")]
    Range(String),
    #[error("refusing to overwrite {0} (pass --force)")]
    Overwrite(PathBuf),
    #[error("{context}: {source}")]
    Sim {
        context: String,
        #[source]
        source: femtosim::Error,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Malformed(_) => 2,
            CliError::Sim { .. } | CliError::Io(_) => 3,
            CliError::Overwrite(_) => 4,
            CliError::MissingFile(_) => 5,
            CliError::Range(_) => 6,
        }
    }

    pub(crate) fn sim(context: impl Into<String>) -> impl FnOnce(femtosim::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Sim { context, source }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "femtosim",
    version,
    about = "Femtocell virtual clustering simulator"
)]
pub struct Cli {
    /// Scenario file; all keys are optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(
        long,
        global = true,
        env = "FEMTOSIM_OUT",
        default_value = "femtosim-out"
    )]
    pub out: PathBuf,
    /// Worker threads for replica execution (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Overwrite existing result files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Base seed, overriding the `seed` key.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: Option<u64>,
    /// `key=value` override, applied after the config file. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// One scenario: per-MS samples and a one-row summary.
    Run,
    /// Full n_faps x channels x algorithm grid and per-figure data.
    Sweep,
    /// GVCF against NCS at every grid point, same random streams.
    Compare,
    /// Look-up table over the grid; with targets set, the smallest cluster
    /// count meeting them.
    Lut,
    /// Adaptation rounds from the configured channel count.
    Adapt,
    /// Topology and GVCF/NCS labels for one drop.
    TraceCluster {
        /// Read the topology from this CSV instead of generating it.
        #[arg(long)]
        topology: Option<PathBuf>,
    },
}

/// Parses configuration, sets up the worker pool and runs the command.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = FileConfig::load(cli.config.as_deref(), &overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Range(format!("--jobs: {e}")))?;
    let out = output::OutputDir::new(&cli.out, cli.force);
    pool.install(|| match &cli.command {
        Command::Run => commands::run(&cfg, &out),
        Command::Sweep => commands::sweep(&cfg, &out),
        Command::Compare => commands::compare(&cfg, &out),
        Command::Lut => commands::lut(&cfg, &out),
        Command::Adapt => commands::adapt(&cfg, &out),
        Command::TraceCluster { topology } => {
            commands::trace_cluster(&cfg, topology.as_deref(), &out)
        }
    })
}

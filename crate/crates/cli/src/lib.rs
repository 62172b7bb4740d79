//! Batch front end: `lut`, `gen`, `run` and `compare` subcommands.

pub mod commands;
pub mod config;
mod output;

use std::path::PathBuf;

use anyhow::{ensure, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "vcsim", version, about = "Vehicular cloud scheduling simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; the base experiment when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `run.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// First seed, overriding `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write a per-run event log under `<out>/events`.
    #[arg(long, global = true)]
    pub event_log: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate MT99R per (class, n) and dump the failure CDFs.
    Lut {
        /// Quantile to tabulate; 0.5 writes the MTTF table.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Write VU and task traces for the first seed.
    Gen,
    /// One report row per (mode, ordering, seed) plus aggregates.
    Run,
    /// Proposed policy against the baseline on paired seeds, with sweeps.
    Compare,
}

/// Resolved invocation shared by all subcommands.
pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub event_log: bool,
    pub pool: rayon::ThreadPool,
}

impl Ctx {
    pub fn new(cli: &Cli) -> Result<Self> {
        let mut cfg = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = cli.seed {
            cfg.run.seed = seed;
        }
        if let Some(out) = &cli.out {
            cfg.run.out = out.clone();
        }
        let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        ensure!(jobs > 0, "--jobs must be positive");
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(Self { out: cfg.run.out.clone(), cfg, event_log: cli.event_log, pool })
    }
}

/// Runs one invocation and returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let ctx = Ctx::new(cli)?;
    match &cli.command {
        Command::Lut { q } => commands::lut(&ctx, *q),
        Command::Gen => {
            let (files, summary) = commands::gen(&ctx)?;
            println!("{summary}");
            Ok(files)
        }
        Command::Run => commands::run(&ctx),
        Command::Compare => commands::compare(&ctx),
    }
}

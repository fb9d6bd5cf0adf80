//! Command-line front end for `tcb-core` experiments.

pub mod commands;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::commands::Report;
use crate::config::{Experiment, ManifestFile, Overrides};

#[derive(Debug, Parser)]
#[command(name = "tcb", version, about = "Fixed-confidence best-arm identification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal allocation and complexity of each instance.
    Complexity(CommonArgs),
    /// Independent stopped trials of each algorithm.
    Simulate(CommonArgs),
    /// Distance to the optimal allocation over time, stopping disabled.
    Trace(CommonArgs),
    /// Mean stopping time of the top-two rules across a beta grid.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML experiment manifest.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Trials per algorithm (seeds averaged, for `trace`).
    #[arg(long, value_name = "N")]
    pub trials: Option<u64>,
    #[arg(long, value_name = "X")]
    pub delta: Option<f64>,
    #[arg(long, value_name = "X")]
    pub alpha: Option<f64>,
    /// Leader probability for the top-two rules.
    #[arg(long, value_name = "X")]
    pub beta: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub parallelism: Option<usize>,
    /// Rounds per trace.
    #[arg(long, value_name = "N")]
    pub horizon: Option<u64>,
    /// Preset instance; repeatable, replaces the manifest's instances.
    #[arg(long = "instance", value_name = "NAME")]
    pub instances: Vec<String>,
    /// Algorithm name; repeatable, replaces the manifest's algorithms.
    #[arg(long = "algorithm", value_name = "NAME")]
    pub algorithms: Vec<String>,
}

impl CommonArgs {
    pub fn experiment(&self) -> Result<Experiment> {
        let file = match &self.config {
            Some(path) => ManifestFile::load(path)?,
            None => ManifestFile::default(),
        };
        let flags = Overrides {
            seed: self.seed,
            trials: self.trials,
            delta: self.delta,
            alpha: self.alpha,
            beta: self.beta,
            parallelism: self.parallelism,
            out: self.out.clone(),
            horizon: self.horizon,
            instances: self.instances.clone(),
            algorithms: self.algorithms.clone(),
        };
        Experiment::resolve(file, flags)
    }
}

pub fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Complexity(a) => commands::cmd_complexity(&a.experiment()?),
        Command::Simulate(a) => commands::cmd_simulate(&a.experiment()?),
        Command::Trace(a) => commands::cmd_trace(&a.experiment()?),
        Command::Sweep(a) => commands::cmd_sweep(&a.experiment()?),
    }
}

/// Parse `args` (program name first) and run.
pub fn run_from<I, T>(args: I) -> Result<Report>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(&Cli::try_parse_from(args)?)
}

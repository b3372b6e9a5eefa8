//! `rmarket`: rolling-window market simulation, settlement, and incentive
//! experiments from a JSON run configuration.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{load_config, RunConfig, SchemeChoice};

#[derive(Parser)]
#[command(name = "rmarket", version, about)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, default_value = "rmarket.json")]
    config: PathBuf,
    /// Override the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configured scenario count.
    #[arg(long, global = true)]
    scenarios: Option<usize>,
    /// Override the configured pricing scheme set.
    #[arg(long, global = true)]
    scheme: Option<SchemeChoice>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the scenario batch (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Dispatch every scenario and write dispatch.csv + prices.csv.
    Simulate,
    /// Simulate plus full settlement (settlement.csv).
    Settle,
    /// Bid-perturbation sweep for the configured ESR (perturb.csv).
    Perturb,
    /// Two-ESR condition audit with the uniform-price oracle (audit.csv).
    Audit,
}

#[derive(Parser)]
#[command(name = "rmarket", version, about)]
struct CliWithCommand {
    #[command(flatten)]
    common: Cli,
    #[command(subcommand)]
    command: Command,
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) {
    if let Some(seed) = cli.seed {
        config.experiment.base_seed = seed;
    }
    if let Some(n) = cli.scenarios {
        config.experiment.scenarios = n;
    }
    if let Some(scheme) = cli.scheme {
        config.experiment.scheme = scheme;
    }
    if let Some(out) = &cli.out {
        config.experiment.out_dir = out.clone();
    }
}

fn run() -> anyhow::Result<()> {
    let cli = CliWithCommand::parse();
    if let Some(jobs) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    let mut config = load_config(&cli.common.config)?;
    let config_sha256 = output::config_hash(&config);
    apply_overrides(&mut config, &cli.common);
    if config.experiment.scenarios == 0 {
        anyhow::bail!("experiment.scenarios: must be at least 1");
    }
    match cli.command {
        Command::Simulate => commands::run_simulate(&config, &config_sha256),
        Command::Settle => commands::run_settle(&config, &config_sha256),
        Command::Perturb => commands::run_perturb(&config, &config_sha256),
        Command::Audit => commands::run_audit(&config, &config_sha256),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

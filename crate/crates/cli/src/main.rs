use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use dscbias_cli::{cmd_analyze, cmd_phantom, cmd_report, cmd_simulate, exit_code, RunConfig};
use dscbias_core::CategoryThresholds;

/// Measure how DSC and nDSC depend on structure volume under uniform
/// segmentation errors, and compare two subject groups.
#[derive(Parser)]
#[command(name = "dscbias", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort of ellipsoidal organs.
    Phantom {
        /// Phantom spec (JSON, or TOML by extension).
        #[arg(long, conflicts_with = "default", required_unless_present = "default")]
        spec: Option<PathBuf>,
        /// Use the built-in reference cohort.
        #[arg(long)]
        default: bool,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate dilation/erosion errors and write the metrics table.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's thread count.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare groups per structure and per volume category.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Metrics table to read instead of the one in the output directory.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Report differences as second group minus first.
        #[arg(long)]
        swap_groups: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a comparisons table as text.
    Report {
        /// Comparisons table (CSV or JSON).
        comparisons: PathBuf,
        /// Config supplying category thresholds.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &std::path::Path, threads: Option<usize>, out: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(t) = threads {
        cfg.threads = t;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Phantom { spec, default, seed, threads, out } => {
            let manifest = cmd_phantom(spec.as_deref(), default, seed, &out, threads)?;
            println!("{}", manifest.display());
        }
        Command::Simulate { config, threads, out } => {
            let cfg = load(&config, threads, out)?;
            println!("{}", cmd_simulate(&cfg)?.display());
        }
        Command::Analyze { config, metrics, swap_groups, out } => {
            let cfg = load(&config, None, out)?;
            println!("{}", cmd_analyze(&cfg, metrics.as_deref(), swap_groups)?.display());
        }
        Command::Report { comparisons, config, out } => {
            let thresholds = match config {
                Some(c) => RunConfig::load(&c)?.thresholds()?,
                None => CategoryThresholds::default(),
            };
            let text = cmd_report(&comparisons, thresholds)?;
            match out {
                Some(path) => std::fs::write(&path, text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

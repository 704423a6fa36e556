use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tmts::commands::{cmd_density, cmd_entanglement, cmd_spectrum, cmd_stats, cmd_sweep, Report};
use tmts::config::RunConfig;
use tmts::{Error, Surface};

/// Two-mode-two-state vibronic model: spectra, entanglement, level statistics
/// and densities.
#[derive(Parser)]
#[command(name = "tmts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Parallel sweep points
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for the Δ3 window placement
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override one config key, e.g. `--set J=0.3` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and the convergence report
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Entanglement entropy and its decomposition for every converged state
    Entanglement {
        #[command(flatten)]
        common: Common,
    },
    /// Spacing distribution, Δ3 rigidity and amplitude statistics
    Stats {
        #[command(flatten)]
        common: Common,
        /// Analyse this level list instead of solving
        #[arg(long)]
        levels: Option<PathBuf>,
    },
    /// Real-space density of one eigenstate
    Density {
        #[command(flatten)]
        common: Common,
        /// State index, counted from 0
        #[arg(long)]
        k: Option<usize>,
        /// A or B (default: both)
        #[arg(long)]
        surface: Option<Surface>,
    },
    /// Spectrum, entanglement and statistics over the (J, θ) grid
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(c: &Common) -> tmts::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for (i, kv) in c.overrides.iter().enumerate() {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config {
            line: i + 1,
            reason: format!("--set expects KEY=VALUE, got `{kv}`"),
        })?;
        cfg.set(k.trim(), v.trim())
            .map_err(|reason| Error::Config { line: i + 1, reason })?;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    if let Some(j) = c.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> tmts::Result<Report> {
    match cli.command {
        Command::Spectrum { common } => cmd_spectrum(&load_config(&common)?),
        Command::Entanglement { common } => cmd_entanglement(&load_config(&common)?),
        Command::Stats { common, levels } => cmd_stats(&load_config(&common)?, levels.as_deref()),
        Command::Density { common, k, surface } => cmd_density(&load_config(&common)?, k, surface),
        Command::Sweep { common } => cmd_sweep(&load_config(&common)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

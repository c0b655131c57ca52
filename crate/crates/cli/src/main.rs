//! `cellfree` command-line front end: run presets or configs, list presets,
//! validate config files. Progress goes to stderr; data only to files.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cellfree::presets::{find_preset, presets};
use cellfree::{load_config, Experiment, Overrides, SystemConfig};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cellfree", version, about = "Cell-free massive MIMO downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its CSV (plus a `.config.json` sidecar).
    Run {
        /// TOML config; missing keys take the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named experiment applied on top of the config.
        #[arg(long)]
        preset: Option<String>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated schemes, e.g. `MMSE+OPA+LS,ZF+UPA+NS`.
        #[arg(long)]
        schemes: Option<String>,
    },
    /// Print the names of the shipped presets.
    ListPresets {
        /// Also print a one-line description.
        #[arg(long)]
        verbose: bool,
    },
    /// Parse and check a config file (optionally with a preset applied).
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        preset: Option<String>,
    },
}

fn base_config(path: Option<&PathBuf>) -> Result<SystemConfig> {
    match path {
        Some(p) => load_config(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SystemConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, preset, out, trials, seed, schemes } => {
            let base = base_config(config.as_ref())?;
            let preset = preset.as_deref().map(find_preset).transpose()?;
            let exp = Experiment::resolve(base, preset.as_ref(), &Overrides { trials, seed, schemes })?;
            log::info!(
                "running {} with {} scheme(s), {} trials, seed {}",
                exp.preset.unwrap_or("config"),
                exp.schemes.len(),
                exp.trials,
                exp.seed()
            );
            let written = exp.run(&out)?;
            for path in written {
                log::info!("wrote {}", path.display());
            }
        }
        Command::ListPresets { verbose } => {
            for p in presets() {
                if verbose {
                    println!("{}\t{}", p.name, p.description);
                } else {
                    println!("{}", p.name);
                }
            }
        }
        Command::Validate { config, preset } => {
            let base = base_config(Some(&config))?;
            let preset = preset.as_deref().map(find_preset).transpose()?;
            let exp = Experiment::resolve(base, preset.as_ref(), &Overrides::default())?;
            log::info!("{} is valid (M = {}, K = {})", config.display(), exp.config.total_antennas(), exp.config.num_users);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

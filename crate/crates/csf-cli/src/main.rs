//! `csf`: run curve shortening flow experiments from flat key-value configs.
//!
//! Outputs go to the directory named by `CSF_OUTPUT_DIR` (default: the
//! working directory). Exit codes: 0 success, 1 a selected check failed,
//! 2 bad config or missing input, 3 numerical or I/O failure.

mod commands;
mod config;
mod svg;

use clap::{Args, Parser, Subcommand};
use config::Config;
use csf_core::CsfError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "csf", version, about = "Curve shortening flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a closed-form or glued solution.
    Exact(Common),
    /// Evolve a family member and write the trajectory plus a summary.
    Evolve(Common),
    /// Spectral modes and dominance of a trombone sheet.
    Spectral(Common),
    /// Entropy of a trajectory or a family member.
    Entropy(Common),
    /// Area law and best-fitting grim reaper of a finger.
    Fit(Common),
    /// Run a battery of checks on a trajectory.
    Verify(Common),
    /// Render an SVG plot.
    Plot(Common),
}

fn keys(parts: &[&[&'static str]]) -> Vec<&'static str> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn run(cli: Cli) -> csf_core::Result<i32> {
    use commands::*;
    let (common, allowed, f): (Common, Vec<&str>, fn(&Config) -> csf_core::Result<i32>) = match cli.command {
        Command::Exact(c) => (c, keys(&[FAMILY_KEYS, EXACT_KEYS]), exact),
        Command::Evolve(c) => (c, keys(&[FAMILY_KEYS, EVOLVE_KEYS]), evolve_cmd),
        Command::Spectral(c) => (c, keys(&[SPECTRAL_KEYS]), spectral),
        Command::Entropy(c) => (c, keys(&[FAMILY_KEYS, ENTROPY_KEYS]), entropy_cmd),
        Command::Fit(c) => (c, keys(&[FIT_KEYS]), fit),
        Command::Verify(c) => (c, keys(&[VERIFY_KEYS]), verify),
        Command::Plot(c) => (c, keys(&[PLOT_KEYS]), plot),
    };
    let cfg = Config::load(common.config.as_deref(), &common.set, &allowed)?;
    f(&cfg)
}

fn main() {
    let code = match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CsfError::ConfigRejected(_) | CsfError::MissingInput(_) | CsfError::Parse(_) => 2,
                _ => 3,
            }
        }
    };
    std::process::exit(code);
}

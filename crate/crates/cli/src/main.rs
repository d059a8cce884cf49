//! `renorm3d`: builds renormalization towers of Hénon-like maps and writes
//! the measured quantities as JSON and CSV, with a summary of every checked
//! inequality and its margin.

mod commands;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use renorm3d::config::RunConfig;

const FILES_HELP: &str = "\
Files written to --out (default: the config's `out`, else ./out):
  fixed-point   fstar.json, vstar.json, a_of_x.csv (x, a)
  tower         tower.json, norms.csv (level, eps_norm, delta_norm, sigma)
  pieces        pieces.csv (word, level, x_lo, y_lo, z_lo, x_hi, y_hi, z_hi, diameter)
  universality  universality.json, residuals.csv (level, E)
  cones         cones.json, line_field.csv (depth, gap, distance, log_sv_ratio)
  lyapunov      lyapunov.json
Every command also writes summary.txt. Floats carry 17 significant digits.

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.";

#[derive(Parser)]
#[command(name = "renorm3d", version, about, after_long_help = FILES_HELP)]
struct Cli {
    /// JSON run configuration; every field is optional.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Depth of the renormalization tower (at most 10).
    #[arg(long, global = true, value_name = "N")]
    depth: Option<usize>,
    /// Seed of the random probes.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Degree of the fixed-point ansatz.
    #[arg(long, global = true, value_name = "N")]
    degree: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve for the renormalization fixed point and the universal functions.
    FixedPoint,
    /// Build the renormalization tower and report the perturbation norms.
    Tower,
    /// Build the pieces of the Cantor attractor at the configured level.
    Pieces,
    /// Average Jacobian and the universal Jacobian law.
    Universality,
    /// Cone-field certificates and toy-model structure.
    Cones,
    /// Lyapunov exponents along the orbit of the tip.
    Lyapunov,
}

/// A problem with the invocation or the configuration.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| UsageError(format!("reading {}: {e}", path.display())))?;
            RunConfig::from_json(&text)
                .map_err(|e| UsageError(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(d) = cli.depth {
        cfg.depth = d;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.degree {
        cfg.degree = d;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = report::Output::create(cfg.out.as_deref().unwrap_or("out".as_ref()))?;
    match cli.command {
        Command::FixedPoint => commands::fixed_point(&cfg, &out),
        Command::Tower => commands::tower(&cfg, &out),
        Command::Pieces => commands::pieces(&cfg, &out),
        Command::Universality => commands::universality(&cfg, &out),
        Command::Cones => commands::cones(&cfg, &out),
        Command::Lyapunov => commands::lyapunov(&cfg, &out),
    }
    .context("command failed")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

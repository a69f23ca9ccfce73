//! `qbesim` — batch front-end for the tripartite decoherence-suppression
//! simulator.
//!
//! Exit codes: 0 on success, 2 on validation or usage failure, 3 on numeric
//! failure. The environment variable `QBESIM_MAX_DIM` overrides the default
//! cap (4096) on the full product-space dimension.

mod commands;
mod error;
mod outputs;
mod overrides;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{
    cmd_analyze, cmd_baseline, cmd_evolve, cmd_protocol, cmd_sweep,
    load_model_with_overrides, parse_pairs, parse_ratios,
};
use crate::error::CliError;
use crate::outputs::OutputDir;

#[derive(Parser)]
#[command(name = "qbesim", version, about = "Qubit-bath-environment decoherence simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ManifestArgs {
    /// Model config file (strict JSON schema).
    #[arg(long)]
    model: PathBuf,
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    /// Config override `key.path=value`, applied after parsing and before
    /// validation. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
    /// Seed for randomized fixture generation; unused by the built-in
    /// commands, which are fully deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact spectral analysis: corrections table and summary.
    Analyze {
        #[command(flatten)]
        manifest: ManifestArgs,
    },
    /// Evolve the configured initial state and trace the observables.
    Evolve {
        #[command(flatten)]
        manifest: ManifestArgs,
        /// End of the time grid; defaults to 5x the predicted plateau.
        #[arg(long)]
        t_end: Option<f64>,
        /// Number of grid points.
        #[arg(long, default_value_t = 256)]
        points: usize,
        /// Tracked qubit index pairs, e.g. `0:1` or `0:1,0:2`.
        #[arg(long, default_value = "0:1")]
        pairs: String,
    },
    /// Run the suppression protocol and verify the fidelity plateau.
    Protocol {
        #[command(flatten)]
        manifest: ManifestArgs,
        /// Fidelity the plateau must maintain.
        #[arg(long, default_value_t = 0.99)]
        threshold: f64,
        /// Check window as a fraction of the predicted plateau duration.
        #[arg(long, default_value_t = 0.1)]
        plateau_fraction: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Number of plateau repetitions (the evolved environment state is
        /// fed back in between repetitions).
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        /// Tracked qubit index pairs.
        #[arg(long, default_value = "0:1")]
        pairs: String,
    },
    /// Sweep the coupling ratio and fit the scaling of eps_max.
    Sweep {
        #[command(flatten)]
        manifest: ManifestArgs,
        /// Descending c/C ladder.
        #[arg(long, default_value = "0.1,0.05,0.02,0.01,0.005")]
        ratios: String,
    },
    /// Two-body baseline: closed-form coherence against direct simulation.
    Baseline {
        #[command(flatten)]
        manifest: ManifestArgs,
        /// End of the time grid.
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 256)]
        points: usize,
        /// Tracked qubit index pair.
        #[arg(long, default_value = "0:1")]
        pairs: String,
    },
}

fn configure_max_dim() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("QBESIM_MAX_DIM") {
        let cap: usize = raw.parse().map_err(|_| {
            CliError::Usage(format!("QBESIM_MAX_DIM value '{raw}' is not a positive integer"))
        })?;
        if cap == 0 {
            return Err(CliError::Usage("QBESIM_MAX_DIM must be positive".into()));
        }
        qbe_core::operators::set_max_dim(cap);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_max_dim()?;
    match cli.command {
        Command::Analyze { manifest } => {
            let (model, state) = load_model_with_overrides(&manifest.model, &manifest.overrides)?;
            let out = OutputDir::prepare(&manifest.out, manifest.force)?;
            cmd_analyze(&model, &state, &out)
        }
        Command::Evolve { manifest, t_end, points, pairs } => {
            let (model, state) = load_model_with_overrides(&manifest.model, &manifest.overrides)?;
            let out = OutputDir::prepare(&manifest.out, manifest.force)?;
            cmd_evolve(&model, &state, &out, t_end, points, &parse_pairs(&pairs)?)
        }
        Command::Protocol { manifest, threshold, plateau_fraction, points, repeat, pairs } => {
            let (model, state) = load_model_with_overrides(&manifest.model, &manifest.overrides)?;
            let out = OutputDir::prepare(&manifest.out, manifest.force)?;
            cmd_protocol(
                &model,
                &state,
                &out,
                threshold,
                plateau_fraction,
                points,
                repeat,
                &parse_pairs(&pairs)?,
            )
        }
        Command::Sweep { manifest, ratios } => {
            let (model, state) = load_model_with_overrides(&manifest.model, &manifest.overrides)?;
            let out = OutputDir::prepare(&manifest.out, manifest.force)?;
            cmd_sweep(&model, &state, &out, &parse_ratios(&ratios)?)
        }
        Command::Baseline { manifest, t_end, points, pairs } => {
            let (model, state) = load_model_with_overrides(&manifest.model, &manifest.overrides)?;
            let out = OutputDir::prepare(&manifest.out, manifest.force)?;
            let pairs = parse_pairs(&pairs)?;
            let pair = *pairs.first().ok_or_else(|| {
                CliError::Usage("at least one tracked pair is required".into())
            })?;
            cmd_baseline(&model, &state, &out, t_end, points, pair)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

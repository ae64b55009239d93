//! `dqd-tomo`: spectra, quorum export, tomography simulation, shot planning
//! and a self-check suite for two-spin-qubit state tomography.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{load, PlanConfig, QuorumConfig, SpectrumConfig, TomographyConfig};
use crate::error::CliError;
use crate::output::Sink;

#[derive(Parser, Debug)]
#[command(name = "dqd-tomo", version, about = "Two-spin-qubit state tomography toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all random streams (tomography only).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files; without it the main table goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of simulated repetitions (tomography only).
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Use exact probabilities instead of sampled counts (tomography only).
    #[arg(long, global = true)]
    exact: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Six-level double-dot spectrum against detuning.
    Spectrum,
    /// Quorum projectors, reconstruction matrix and circuits.
    Quorum {
        /// Quorum name (mub or james); overrides the config.
        #[arg(long)]
        name: Option<String>,
    },
    /// Simulate measurements of a known state and reconstruct it.
    Tomography,
    /// Shot counts over a grid of accuracy, confidence and fidelity.
    Plan,
    /// Run the self-check suite.
    Verify {
        /// Rotate quorum member INDEX before checking.
        #[arg(long, hide = true, value_name = "INDEX")]
        perturb_quorum: Option<usize>,
    },
}

impl Cli {
    fn reject_tomography_flags(&self, command: &str) -> Result<(), CliError> {
        let used: Vec<&str> = [
            self.seed.map(|_| "--seed"),
            self.reps.map(|_| "--reps"),
            self.exact.then_some("--exact"),
        ]
        .into_iter()
        .flatten()
        .collect();
        if used.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("{} not accepted by `{command}`", used.join(", "))))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::Spectrum => {
            cli.reject_tomography_flags("spectrum")?;
            let cfg: SpectrumConfig = load(cfg_path)?;
            commands::spectrum(&cfg, &Sink::new(cli.out.clone())?)
        }
        Command::Quorum { name } => {
            cli.reject_tomography_flags("quorum")?;
            let mut cfg: QuorumConfig = load(cfg_path)?;
            if let Some(n) = name {
                cfg.quorum = n.clone();
            }
            commands::quorum(&cfg, &Sink::new(cli.out.clone())?)
        }
        Command::Tomography => {
            let mut cfg: TomographyConfig = load(cfg_path)?;
            cfg.seed = Some(cli.seed.or(cfg.seed).unwrap_or(0));
            cfg.reps = cli.reps.or(cfg.reps);
            cfg.exact |= cli.exact;
            commands::tomography(&cfg, &Sink::new(cli.out.clone())?)
        }
        Command::Plan => {
            cli.reject_tomography_flags("plan")?;
            let cfg: PlanConfig = load(cfg_path)?;
            commands::plan(&cfg, &Sink::new(cli.out.clone())?)
        }
        Command::Verify { perturb_quorum } => {
            cli.reject_tomography_flags("verify")?;
            if cfg_path.is_some() {
                return Err(CliError::Config("`verify` takes no configuration".into()));
            }
            commands::verify(*perturb_quorum, &Sink::new(cli.out.clone())?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dqd-tomo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

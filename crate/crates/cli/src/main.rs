use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use czpulse_cli::commands::{cmd_gate, cmd_ramp, cmd_spectrum, cmd_sweep, Overrides};
use czpulse_cli::{CliError, RunConfig};
use czpulse_core::gate::GateModel;
use czpulse_core::pulse::ProtocolKind;
use czpulse_core::sweep::SweepMode;

/// Pulse design, simulation and calibration of fast CZ gates on
/// tunable-coupling transmons.
#[derive(Parser, Debug)]
#[command(name = "czpulse", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file (TOML); defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare full and effective spectra over the coupling range.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Export coupling waveforms and the ramp audit for both protocols.
    Ramp {
        #[command(flatten)]
        common: Common,
    },
    /// Run a single gate and report its outcome.
    Gate {
        #[command(flatten)]
        common: Common,
        /// Ramp time T in ns (default: first configured ramp time).
        #[arg(long)]
        ramp_time: Option<f64>,
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<ProtocolKind>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<SweepMode>,
        /// Hamiltonian model: full | effective | reduced.
        #[arg(long, value_parser = parse_model)]
        model: Option<GateModel>,
        /// Print the analytic seeds (t_w0, Delta0) and exit.
        #[arg(long)]
        seed_only: bool,
    },
    /// Sweep gate performance over the configured ramp times.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<ProtocolKind>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<SweepMode>,
        /// Worker threads for the sweep (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Print the analytic seeds per ramp time and exit.
        #[arg(long)]
        seed_only: bool,
    },
}

fn parse_protocol(s: &str) -> Result<ProtocolKind, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<SweepMode, String> {
    s.parse()
}

fn parse_model(s: &str) -> Result<GateModel, String> {
    s.parse()
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Validation),
        None => Ok(RunConfig::default()),
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::try_parse().map_err(|e| CliError::Validation(e.to_string()))?;
    match cli.command {
        Command::Spectrum { common } => {
            let config = load_config(&common)?;
            cmd_spectrum(&config, &Overrides { out_dir: common.out, ..Default::default() })
        }
        Command::Ramp { common } => {
            let config = load_config(&common)?;
            cmd_ramp(&config, &Overrides { out_dir: common.out, ..Default::default() })
        }
        Command::Gate { common, ramp_time, protocol, mode, model, seed_only } => {
            let config = load_config(&common)?;
            cmd_gate(
                &config,
                &Overrides {
                    out_dir: common.out,
                    protocol,
                    mode,
                    model,
                    ramp_time,
                    seed_only,
                    workers: None,
                },
            )
        }
        Command::Sweep { common, protocol, mode, workers, seed_only } => {
            let config = load_config(&common)?;
            cmd_sweep(
                &config,
                &Overrides { out_dir: common.out, protocol, mode, workers, seed_only, ..Default::default() },
            )
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

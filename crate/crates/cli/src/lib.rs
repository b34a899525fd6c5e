//! `mbs-lab`: scenario sweeps and self-validation on top of `mbs_core`.

pub mod commands;
pub mod config;
pub mod oracle;
pub mod output;
pub mod validate;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mbs_core::MbsError;

use crate::config::{Command, MethodName, Overrides, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
    #[error("validation failed")]
    Validation,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) | CliError::Validation => 2,
        }
    }

    /// Domain errors come from user input; everything else is a numerical failure.
    pub fn from_core(err: MbsError, context: &str) -> Self {
        match err {
            MbsError::Domain(msg) => CliError::Config(format!("{context}: {msg}")),
            other => CliError::Numerical(format!("{context}: {other}")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mbs-lab", version, about = "Mirror-assisted backscattering sweeps and self-checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// First-order coherence of one emitter versus delay.
    G1(RunArgs),
    /// Inelastic (Mollow) spectrum of one emitter.
    Spectrum(RunArgs),
    /// Single-scatterer contrast or fringe.
    Single(RunArgs),
    /// Cloud fringe intensity.
    Cloud(RunArgs),
    /// Fitted cloud contrast versus delay or waveplate angle.
    Contrast(RunArgs),
    /// Run the self-validation suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON scenario file; every key has a default.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// CSV path; the resolved config is written to `<out>.json`. Without it the CSV goes to stdout.
    #[arg(long)]
    pub out: Option<String>,
    /// quadrature, montecarlo, closed_perp or single_atom.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Reduced suite.
    #[arg(long)]
    pub fast: bool,
    /// Perturb the emitter coherence to check that the suite notices.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Applies `MBS_LAB_THREADS` (0 or unset means one thread per core).
pub fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var("MBS_LAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("MBS_LAB_THREADS: expected a non-negative integer, got `{v}`")))?,
        Err(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("MBS_LAB_THREADS: {e}")))?;
    }
    Ok(())
}

fn run_sweep(command: Command, args: &RunArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let overrides = Overrides {
        seed: args.seed,
        tol: args.tol,
        out: args.out.clone(),
        method: args.method.as_deref().map(MethodName::parse).transpose()?,
    };
    let resolved = config.resolve(command, &overrides)?;
    for warning in resolved.cloud.validity_warnings(&resolved.geometry) {
        eprintln!("warning: {warning:?}");
    }
    let table = commands::run(command, &resolved)?;
    for note in &table.notes {
        eprintln!("{note}");
    }
    match &resolved.config.output {
        Some(path) => {
            let sidecar = output::write_outputs(&table, &resolved.config, path.as_ref())?;
            eprintln!("wrote {} rows to {path} (config echo {})", table.rows.len(), sidecar.display());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn run_validate(args: &ValidateArgs) -> Result<(), CliError> {
    if args.inject_fault {
        mbs_core::emitter::inject_fault(mbs_core::emitter::Fault::SidebandDecay);
    }
    let results = validate::run_suite(args.fast);
    print!("{}", validate::format_report(&results));
    if results.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(CliError::Validation)
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        CliCommand::G1(a) => run_sweep(Command::G1, a),
        CliCommand::Spectrum(a) => run_sweep(Command::Spectrum, a),
        CliCommand::Single(a) => run_sweep(Command::Single, a),
        CliCommand::Cloud(a) => run_sweep(Command::Cloud, a),
        CliCommand::Contrast(a) => run_sweep(Command::Contrast, a),
        CliCommand::Validate(a) => run_validate(a),
    }
}

//! `conecap`: batch front-end with reproducible seeds and machine-readable
//! output.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conecap_core::config::Tolerances;
use conecap_core::Error;

use commands::{CapacityArgs, MetricArgs, SandwichArgs, SmoothingArgs, SpectrumArgs, SqueezeArgs, Status};
use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::ScanBudget(_) => 3,
                Error::OutOfTheory(_) => 5,
                Error::Infeasible(_) => 6,
                Error::Integration(_) | Error::RootFinding(_) | Error::WellCondition(_) => 7,
                _ => 2,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "conecap", version, about = "Capacities, action spectra and the relative-growth metric")]
struct Cli {
    /// TOML run configuration (keys: command, seed, format, out, tolerances, params).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Characteristic action spectrum of the bounded domain V_C.
    Spectrum(SpectrumArgs),
    /// Hyperboloid sandwich of V(H) with a Monte-Carlo containment audit.
    Sandwich(SandwichArgs),
    /// Capacity of a hyperboloid or an enclosure for V(H).
    Capacity(CapacityArgs),
    /// Non-squeezing sweep over random candidate maps.
    Squeeze(SqueezeArgs),
    /// Pseudo-distances and witnessed order on a family of cone elements.
    Metric(MetricArgs),
    /// Checks of the smoothed symplectization of a random isotopy.
    SmoothingAudit(SmoothingArgs),
}

impl Cmd {
    fn into_parts(self) -> Result<(&'static str, serde_json::Value), serde_json::Error> {
        Ok(match self {
            Cmd::Spectrum(a) => ("spectrum", serde_json::to_value(a)?),
            Cmd::Sandwich(a) => ("sandwich", serde_json::to_value(a)?),
            Cmd::Capacity(a) => ("capacity", serde_json::to_value(a)?),
            Cmd::Squeeze(a) => ("squeeze", serde_json::to_value(a)?),
            Cmd::Metric(a) => ("metric", serde_json::to_value(a)?),
            Cmd::SmoothingAudit(a) => ("smoothing-audit", serde_json::to_value(a)?),
        })
    }
}

fn run_config(cli: Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (cli.config, cli.command) {
        (Some(path), None) => RunConfig::from_toml_file(&path)?,
        (None, Some(cmd)) => {
            let (name, params) = cmd.into_parts().map_err(|e| CliError::Invalid(e.to_string()))?;
            RunConfig {
                command: name.to_owned(),
                seed: 0,
                format: Format::Json,
                out: None,
                tolerances: Tolerances::default(),
                params,
            }
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Invalid("give either a subcommand or --config, not both".into()));
        }
        (None, None) => return Err(CliError::Invalid("no subcommand given (see --help)".into())),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(o) = cli.out {
        cfg.out = Some(o);
    }
    config::normalize(&mut cfg)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run_config(cli).and_then(|cfg| {
        let outcome = commands::run(&cfg)?;
        output::write(&cfg, &outcome)?;
        Ok(outcome.status)
    });
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Budget(msg)) => {
            eprintln!("conecap: scan budget exceeded: {msg}");
            ExitCode::from(3)
        }
        Ok(Status::Audit(msg)) => {
            eprintln!("conecap: audit failed: {msg}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("conecap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

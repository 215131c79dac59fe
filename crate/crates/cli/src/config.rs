use std::path::{Path, PathBuf};

use clap::{Args, Command, FromArgMatches, ValueEnum};
use conecap_core::config::Tolerances;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Format::Json => Format::Csv,
            Format::Csv => Format::Json,
        }
    }
}

/// Everything that determines the output of a run. Files written by the
/// CLI embed this verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "empty_params")]
    pub params: serde_json::Value,
}

fn empty_params() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let raw: toml::Value = toml::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        // Route through JSON so that `params` has one representation.
        let json = serde_json::to_value(raw).map_err(|e| CliError::Invalid(e.to_string()))?;
        serde_json::from_value(json).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    /// Parameters of the command, with defaults filled in; unknown keys are
    /// rejected.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.params.clone()).map_err(|e| CliError::Invalid(format!("params: {e}")))
    }
}

/// Defaults of a clap argument group, shared with the config file.
pub fn clap_defaults<T: Args + FromArgMatches>() -> T {
    let cmd = T::augment_args(Command::new("defaults").no_binary_name(true));
    let m = cmd.try_get_matches_from(Vec::<String>::new()).expect("every argument has a default");
    T::from_arg_matches(&m).expect("defaults are valid")
}

/// Fills in defaults and normalizes the parameter map of `command`.
pub fn normalize(cfg: &mut RunConfig) -> Result<(), CliError> {
    use crate::commands::*;
    fn norm<T: DeserializeOwned + Serialize>(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
        let p: T = cfg.params()?;
        serde_json::to_value(p).map_err(|e| CliError::Invalid(e.to_string()))
    }
    cfg.params = match cfg.command.as_str() {
        "spectrum" => norm::<SpectrumArgs>(cfg)?,
        "sandwich" => norm::<SandwichArgs>(cfg)?,
        "capacity" => norm::<CapacityArgs>(cfg)?,
        "squeeze" => norm::<SqueezeArgs>(cfg)?,
        "metric" => norm::<MetricArgs>(cfg)?,
        "smoothing-audit" => norm::<SmoothingArgs>(cfg)?,
        other => return Err(CliError::Invalid(format!("unknown command {other:?}"))),
    };
    Ok(())
}

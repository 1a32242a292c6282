//! Experiment configuration.
//!
//! A config is one TOML file:
//!
//! ```toml
//! device_id = "iid_bell"
//! protocol = "bb84"
//! trials = 10
//! seed = 42
//! analyses = ["qber", "naive_claim"]
//!
//! [protocol_params]
//! n_rounds = 200
//! test_selection = { mode = "spot_check", gamma = 0.25 }
//!
//! [output]
//! path = "out"
//! format = "json"
//! ```
//!
//! `protocol_params` takes the bb84 protocol fields (`n_rounds`,
//! `test_selection`, `key_basis`, `basis_bias`, `pa_output_length`) or, for
//! `example_protocol`, `n_pairs` and `pa_output_length`. Unknown keys are
//! errors everywhere.

use std::path::{Path, PathBuf};

use memlab::devices::{registry, Device};
use memlab::protocol::{ExampleConfig, ProtocolConfig, ProtocolKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analyses::{check_analyses, AnalysisPlan};
use crate::error::{io_error, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (json or csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_path")]
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
}

fn default_path() -> PathBuf {
    PathBuf::from("memlab_out")
}

fn default_format() -> Format {
    Format::Json
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            path: default_path(),
            format: default_format(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProtocolParams {
    Bb84(ProtocolConfig),
    Example(ExampleConfig),
}

impl ProtocolParams {
    pub fn n_rounds(&self) -> usize {
        match self {
            ProtocolParams::Bb84(c) => c.n_rounds,
            ProtocolParams::Example(c) => c.n_rounds(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    device_id: String,
    protocol: ProtocolKind,
    protocol_params: Value,
    trials: u64,
    seed: u64,
    analyses: Vec<String>,
    #[serde(default = "default_strategy")]
    strategy: String,
    #[serde(default)]
    output: OutputSpec,
}

fn default_strategy() -> String {
    "copy_decoder".into()
}

/// Fully resolved experiment. `output` says where results go and is not
/// part of the recorded configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub device_id: String,
    pub protocol: ProtocolKind,
    pub protocol_params: ProtocolParams,
    pub trials: u64,
    pub seed: u64,
    pub analyses: Vec<String>,
    /// Eve's decoder for `eve_guessing`.
    pub strategy: String,
    #[serde(skip)]
    pub output: OutputSpec,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub strategy: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses the configuration recorded in a transcript header.
    pub fn from_recorded(value: &Value) -> CliResult<Self> {
        let raw: RawConfig =
            serde_json::from_value(value.clone()).map_err(|e| CliError::config(format!("recorded config: {e}")))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> CliResult<Self> {
        let params = match raw.protocol {
            ProtocolKind::Bb84 => {
                let c: ProtocolConfig = serde_json::from_value(raw.protocol_params)
                    .map_err(|e| CliError::config(format!("protocol_params: {e}")))?;
                c.validate().map_err(|e| CliError::config(format!("protocol_params: {e}")))?;
                ProtocolParams::Bb84(c)
            }
            ProtocolKind::ExampleProtocol => {
                let c: ExampleConfig = serde_json::from_value(raw.protocol_params)
                    .map_err(|e| CliError::config(format!("protocol_params: {e}")))?;
                if c.n_pairs == 0 {
                    return Err(CliError::config("protocol_params.n_pairs: must be at least 1"));
                }
                ProtocolParams::Example(c)
            }
        };
        let config = Self {
            device_id: raw.device_id,
            protocol: raw.protocol,
            protocol_params: params,
            trials: raw.trials,
            seed: raw.seed,
            analyses: raw.analyses,
            strategy: raw.strategy,
            output: raw.output,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn apply(mut self, o: &Overrides) -> CliResult<Self> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(p) = &o.out {
            self.output.path = p.clone();
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(s) = &o.strategy {
            self.strategy = s.clone();
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> CliResult<()> {
        if !registry::DEVICE_IDS.contains(&self.device_id.as_str()) {
            return Err(CliError::config(format!(
                "device_id: unknown device `{}` (known: {})",
                self.device_id,
                registry::DEVICE_IDS.join(", ")
            )));
        }
        if self.trials == 0 {
            return Err(CliError::config("trials: must be at least 1"));
        }
        if self.analyses.is_empty() {
            return Err(CliError::config("analyses: list must not be empty"));
        }
        let device = self.device()?;
        check_analyses(&self.analyses, &self.plan(&device))
    }

    /// Builds the configured device for the protocol's round count.
    pub fn device(&self) -> CliResult<Device> {
        let n = self.protocol_params.n_rounds();
        let device = registry::build(&self.device_id, n).map_err(|e| CliError::config(format!("device_id: {e}")))?;
        device
            .check_rounds(n)
            .map_err(|e| CliError::config(format!("device_id: {e}")))?;
        Ok(device)
    }

    pub fn plan<'a>(&'a self, device: &'a Device) -> AnalysisPlan<'a> {
        AnalysisPlan {
            device,
            protocol: self.protocol,
            rounds: self.protocol_params.n_rounds(),
            strategy: &self.strategy,
        }
    }

    /// The configuration as recorded in transcripts and reports.
    pub fn recorded(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub(crate) fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

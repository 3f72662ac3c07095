//! Run configuration files.
//!
//! A config is TOML with a fixed header and a `[params]` table whose shape
//! depends on `command`. Every level rejects unknown keys.
//!
//! ```toml
//! schema = 1
//! command = "bounds"
//! seed = 0                 # optional, default 0
//! format = "table"         # optional
//! output_path = "out.txt"  # optional
//!
//! [params]
//! rj = 0.435
//! rk = 0.465
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use trialkit::rdd::{NoiseSpec, RddScenarioSpec};
use trialkit::tdesign::CohortSpec;

use crate::report::Format;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Bounds,
    Oracle,
    Transport,
    TdSim,
    KSweep,
    RddSim,
    Confounding,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Bounds => "bounds",
            CommandName::Oracle => "oracle",
            CommandName::Transport => "transport",
            CommandName::TdSim => "td-sim",
            CommandName::KSweep => "k-sweep",
            CommandName::RddSim => "rdd-sim",
            CommandName::Confounding => "confounding",
        }
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    command: CommandName,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    format: Option<Format>,
    #[serde(default)]
    output_path: Option<PathBuf>,
    params: toml::Table,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsParams {
    pub rj: f64,
    pub rk: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    pub n: u64,
    pub rj: f64,
    pub rk: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportParams {
    pub n: u64,
    pub p: f64,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub n_star: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdSimParams {
    pub draws: u64,
    pub cohort: CohortSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSweepParams {
    pub draws: u64,
    pub sigmas: Vec<f64>,
    pub cohort: CohortSpec,
}

/// Inputs for the calibrated adversarial construction.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialParams {
    pub cutoff: f64,
    pub latent_window: (f64, f64),
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RddSimParams {
    pub n_pop: u64,
    #[serde(default)]
    pub scenario: Option<RddScenarioSpec>,
    #[serde(default)]
    pub adversarial: Option<AdversarialParams>,
    #[serde(default)]
    pub emit_density: Option<PathBuf>,
}

/// `outcomes[i][x]` is 1, 0, or -1 for an unknown potential outcome.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfoundingParams {
    pub arms: usize,
    pub assigned: Vec<usize>,
    pub outcomes: Vec<Vec<i64>>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Bounds(BoundsParams),
    Oracle(OracleParams),
    Transport(TransportParams),
    TdSim(TdSimParams),
    KSweep(KSweepParams),
    RddSim(RddSimParams),
    Confounding(ConfoundingParams),
}

impl Params {
    pub fn command(&self) -> CommandName {
        match self {
            Params::Bounds(_) => CommandName::Bounds,
            Params::Oracle(_) => CommandName::Oracle,
            Params::Transport(_) => CommandName::Transport,
            Params::TdSim(_) => CommandName::TdSim,
            Params::KSweep(_) => CommandName::KSweep,
            Params::RddSim(_) => CommandName::RddSim,
            Params::Confounding(_) => CommandName::Confounding,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub seed: u64,
    pub format: Option<Format>,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn command(&self) -> CommandName {
        self.params.command()
    }
}

/// A config that failed to parse or validate. Always exit status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn typed<T: DeserializeOwned>(table: toml::Table) -> Result<T, ConfigError> {
    T::deserialize(table).map_err(|e| ConfigError(format!("params: {}", e.to_string().trim_end())))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
    if raw.schema != SCHEMA_VERSION {
        return Err(ConfigError(format!(
            "schema: unsupported version {} (expected {SCHEMA_VERSION})",
            raw.schema
        )));
    }
    let params = match raw.command {
        CommandName::Bounds => Params::Bounds(typed(raw.params)?),
        CommandName::Oracle => Params::Oracle(typed(raw.params)?),
        CommandName::Transport => Params::Transport(typed(raw.params)?),
        CommandName::TdSim => Params::TdSim(typed(raw.params)?),
        CommandName::KSweep => Params::KSweep(typed(raw.params)?),
        CommandName::RddSim => {
            let p: RddSimParams = typed(raw.params)?;
            if p.scenario.is_some() == p.adversarial.is_some() {
                return Err(ConfigError(
                    "params: exactly one of `scenario` or `adversarial` is required".into(),
                ));
            }
            Params::RddSim(p)
        }
        CommandName::Confounding => Params::Confounding(typed(raw.params)?),
    };
    Ok(RunConfig { params, seed: raw.seed.unwrap_or(0), format: raw.format, output_path: raw.output_path })
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("config: cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

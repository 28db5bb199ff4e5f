//! The TOML run-configuration format.
//!
//! A `config_version` field gates parsing so golden files cannot drift
//! silently. The scenario block is written with a `name` key plus the
//! scenario's own parameters and maps directly onto the core parameter types.

use serde::Deserialize;
use sim6g_core::scenarios::{ActorSpec, NodeSpec, ScenarioConfig, ScenarioParams};

use crate::CliError;

pub const SUPPORTED_CONFIG_VERSION: u64 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u64,
    pub seed: u64,
    pub nodes: Vec<NodeSpec>,
    pub actors: Vec<ActorSpec>,
    /// Present for `scenario run`; key/DID/VC commands need only the network.
    pub scenario: Option<toml::Table>,
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<String>,
    /// Expected outcome: `success` or `expected_denial`; a run that lands on
    /// anything else exits nonzero.
    pub expect: Option<String>,
}

impl RunConfig {
    pub fn load(path: &str) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config `{path}`: {e}")))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Input(format!("config `{path}`: {e}")))?;
        if config.config_version != SUPPORTED_CONFIG_VERSION {
            return Err(CliError::Input(format!(
                "config_version {} is not supported (expected {})",
                config.config_version, SUPPORTED_CONFIG_VERSION
            )));
        }
        if config.nodes.is_empty() {
            return Err(CliError::Input("config declares no nodes".into()));
        }
        for actor in &config.actors {
            if !config.nodes.iter().any(|n| n.node_id == actor.node_id) {
                return Err(CliError::Input(format!(
                    "actor `{}` references undeclared node `{}`",
                    actor.actor_id, actor.node_id
                )));
            }
        }
        Ok(config)
    }

    /// The full scenario config, for `scenario run`.
    pub fn scenario_config(&self, seed_override: Option<u64>) -> Result<ScenarioConfig, CliError> {
        let table = self
            .scenario
            .as_ref()
            .ok_or_else(|| CliError::Input("config has no [scenario] block".into()))?;
        let value = serde_json::to_value(table)
            .map_err(|e| CliError::Input(format!("scenario block: {e}")))?;
        let params: ScenarioParams = serde_json::from_value(value)
            .map_err(|e| CliError::Input(format!("scenario block: {e}")))?;
        Ok(ScenarioConfig {
            seed: seed_override.unwrap_or(self.seed),
            nodes: self.nodes.clone(),
            actors: self.actors.clone(),
            params,
        })
    }
}

//! TOML run configuration.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use gridswarm_core::gen::EnvConfig;
use gridswarm_core::TaskKind;
use serde::{Deserialize, Serialize};

use crate::gateway::ModelEndpointConfig;
use crate::runner::ScriptedPolicy;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Task names; empty means all five.
    #[serde(default)]
    pub tasks: Vec<String>,
    /// Seeds shared by every task (and every model, when comparing runs).
    pub seeds: Vec<u64>,
    /// Episodes per (task, seed).
    #[serde(default = "default_repeat")]
    pub repeat: u32,
    #[serde(default = "default_agents")]
    pub num_agents: u32,
    #[serde(default = "default_view")]
    pub view_size: u32,
    #[serde(default = "default_memory")]
    pub memory_size: u32,
    #[serde(default = "default_rounds")]
    pub max_round: u32,
    #[serde(default = "default_dim")]
    pub height: i32,
    #[serde(default = "default_dim")]
    pub width: i32,
    pub output_dir: PathBuf,
    /// "scripted" (default) or "llm".
    #[serde(default = "default_backend")]
    pub backend: String,
    /// Scripted policy: "stay", "random-walk", or "chatty-walk".
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default)]
    pub endpoint: Option<EndpointSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSection {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key; never stored in configs.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_concurrent")]
    pub max_concurrent: usize,
}

fn default_repeat() -> u32 {
    1
}
fn default_agents() -> u32 {
    12
}
fn default_view() -> u32 {
    5
}
fn default_memory() -> u32 {
    5
}
fn default_rounds() -> u32 {
    100
}
fn default_dim() -> i32 {
    14
}
fn default_backend() -> String {
    "scripted".into()
}
fn default_policy() -> String {
    "random-walk".into()
}
fn default_key_env() -> String {
    "GRIDSWARM_API_KEY".into()
}
fn default_temperature() -> f64 {
    0.7
}
fn default_retries() -> u32 {
    2
}
fn default_timeout() -> u64 {
    120
}
fn default_concurrent() -> usize {
    8
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("config needs at least one seed");
        }
        for t in &self.tasks {
            if TaskKind::parse(t).is_none() {
                bail!(
                    "unknown task {t:?}; expected one of {}",
                    TaskKind::ALL.map(|t| t.name()).join(", ")
                );
            }
        }
        match self.backend.as_str() {
            "scripted" => {
                self.scripted_policy()?;
            }
            "llm" => {
                if self.endpoint.is_none() {
                    bail!("backend = \"llm\" requires an [endpoint] section");
                }
            }
            other => bail!("unknown backend {other:?}; expected \"scripted\" or \"llm\""),
        }
        Ok(())
    }

    pub fn task_list(&self) -> Vec<TaskKind> {
        if self.tasks.is_empty() {
            TaskKind::ALL.to_vec()
        } else {
            self.tasks
                .iter()
                .filter_map(|t| TaskKind::parse(t))
                .collect()
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            height: self.height,
            width: self.width,
            num_agents: self.num_agents,
            view_size: self.view_size,
            memory_size: self.memory_size,
            max_round: self.max_round,
            ..EnvConfig::default()
        }
    }

    pub fn scripted_policy(&self) -> Result<ScriptedPolicy> {
        match self.policy.as_str() {
            "stay" => Ok(ScriptedPolicy::Stay),
            "random-walk" => Ok(ScriptedPolicy::RandomWalk),
            "chatty-walk" => Ok(ScriptedPolicy::ChattyWalk),
            other => bail!(
                "unknown policy {other:?}; expected \"stay\", \"random-walk\" or \"chatty-walk\""
            ),
        }
    }

    /// Resolve the endpoint section into a gateway config, reading the API
    /// key from the configured environment variable.
    pub fn endpoint_config(&self) -> Result<ModelEndpointConfig> {
        let e = self
            .endpoint
            .as_ref()
            .context("config has no [endpoint] section")?;
        let api_key = std::env::var(&e.api_key_env).unwrap_or_default();
        Ok(ModelEndpointConfig {
            base_url: e.base_url.clone(),
            model: e.model.clone(),
            api_key,
            temperature: e.temperature,
            max_retries: e.max_retries,
            timeout: Duration::from_secs(e.timeout_secs),
            max_concurrent: e.max_concurrent.max(1),
        })
    }
}

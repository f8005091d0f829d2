//! Run configuration from a TOML or JSON file.
//!
//! Scenario parameters are flat top-level keys (`horizon = 30`, ...); the
//! remaining keys configure the suite, the generator and the harness.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value as Json;
use thiserror::Error;

use crate::am::{DEFAULT_COMMAND, DEFAULT_STEP_TIMEOUT_MS};
use crate::feedback::{HttpGeneratorConfig, DEFAULT_MAX_ITERATIONS};
use crate::sim::{default_suite, ScenarioConfig, SuiteEntry};

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV: &str = "FCLLOOP_CONFIG";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("config {path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub suite: Vec<SuiteEntry>,
    pub generator: Option<HttpGeneratorConfig>,
    /// Suite episodes run at once; 0 means one per CPU.
    pub parallelism: usize,
    pub max_iterations: usize,
    pub step_timeout_ms: u64,
    pub am_command: String,
    pub prompt_template: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            suite: default_suite(),
            generator: None,
            parallelism: 0,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            step_timeout_ms: DEFAULT_STEP_TIMEOUT_MS,
            am_command: DEFAULT_COMMAND.to_string(),
            prompt_template: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HarnessKeys {
    suite: Option<Vec<SuiteEntry>>,
    generator: Option<HttpGeneratorConfig>,
    parallelism: Option<usize>,
    max_iterations: Option<usize>,
    step_timeout_ms: Option<u64>,
    am_command: Option<String>,
    prompt_template: Option<PathBuf>,
}

const HARNESS_KEYS: [&str; 7] = [
    "suite",
    "generator",
    "parallelism",
    "max_iterations",
    "step_timeout_ms",
    "am_command",
    "prompt_template",
];

impl RunConfig {
    /// Reads `path`; `.json` files are JSON, anything else TOML. A relative
    /// `prompt_template` is resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let err = |message: String| ConfigError {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let value: Json = if is_json {
            serde_json::from_str(&text).map_err(|e| err(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| err(e.to_string()))?
        };
        let mut cfg = Self::from_value(value).map_err(err)?;
        if let Some(t) = &cfg.prompt_template {
            if t.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.prompt_template = Some(base.join(t));
            }
        }
        Ok(cfg)
    }

    pub fn from_value(value: Json) -> Result<Self, String> {
        let Json::Object(mut all) = value else {
            return Err("expected a table of settings".into());
        };
        let mut harness = serde_json::Map::new();
        for k in HARNESS_KEYS {
            if let Some(v) = all.remove(k) {
                harness.insert(k.to_string(), v);
            }
        }
        let scenario: ScenarioConfig =
            serde_json::from_value(Json::Object(all)).map_err(|e| e.to_string())?;
        scenario.validate().map_err(|e| e.to_string())?;
        let h: HarnessKeys = serde_json::from_value(Json::Object(harness)).map_err(|e| e.to_string())?;
        let d = RunConfig::default();
        let suite = h.suite.unwrap_or(d.suite);
        if suite.is_empty() {
            return Err("suite must list at least one episode".into());
        }
        let am_command = h.am_command.unwrap_or(d.am_command);
        if am_command.matches("{source}").count() != 1 {
            return Err("am_command must contain exactly one {source} placeholder".into());
        }
        Ok(Self {
            scenario,
            suite,
            generator: h.generator,
            parallelism: h.parallelism.unwrap_or(d.parallelism),
            max_iterations: h.max_iterations.unwrap_or(d.max_iterations).max(1),
            step_timeout_ms: h.step_timeout_ms.unwrap_or(d.step_timeout_ms),
            am_command,
            prompt_template: h.prompt_template,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Role;

    fn write(name: &str, text: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        (dir, p)
    }

    #[test]
    fn toml_with_flat_scenario_keys() {
        let (_d, p) = write(
            "c.toml",
            r#"
horizon = 20
spawn_cost = 4
initial_villagers = [{ role = "Warrior", location = "Village" }]
parallelism = 2
prompt_template = "prompt.toml"

[[suite]]
seed = 9

[generator]
base_url = "http://localhost:1"
model = "m"
auth_env = "TOKEN"
"#,
        );
        let c = RunConfig::load(&p).unwrap();
        assert_eq!(c.scenario.horizon, 20);
        assert_eq!(c.scenario.spawn_cost, 4);
        assert_eq!(c.scenario.dragon_hp0, 50);
        assert_eq!(c.scenario.initial_villagers[0].role, Role::Warrior);
        assert_eq!(c.suite, vec![SuiteEntry::seed(9)]);
        assert_eq!(c.parallelism, 2);
        assert_eq!(c.generator.unwrap().auth_env, "TOKEN");
        assert_eq!(c.prompt_template.unwrap(), p.parent().unwrap().join("prompt.toml"));
    }

    #[test]
    fn json_and_errors() {
        let (_d, p) = write("c.json", r#"{"horizon": 12, "max_iterations": 3}"#);
        let c = RunConfig::load(&p).unwrap();
        assert_eq!((c.scenario.horizon, c.max_iterations), (12, 3));
        assert_eq!(c.suite.len(), 5);

        let (_d, p) = write("c.toml", "horizn = 3\n");
        assert!(RunConfig::load(&p).unwrap_err().message.contains("horizn"));
        let (_d, p) = write("c.toml", "retaliate_prob = 2.0\n");
        assert!(RunConfig::load(&p).is_err());
        assert!(RunConfig::load(Path::new("/nonexistent/c.toml")).is_err());
    }
}

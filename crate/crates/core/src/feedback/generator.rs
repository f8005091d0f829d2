//! Sources of AM code: a chat-completion endpoint, recorded responses, or
//! the builtin mirrors.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::FeedbackError;
use crate::am::{mirror_source, BuiltinKind, PolicyRules};

pub trait CodeGenerator: Send {
    /// Full response text for `prompt`.
    fn generate(&mut self, prompt: &str) -> Result<String, FeedbackError>;

    fn describe(&self) -> String;
}

/// Code from the first fenced block (language tag dropped), else the whole
/// response.
pub fn extract_code(response: &str) -> String {
    let Some(open) = response.find("```") else {
        return response.to_string();
    };
    let after = &response[open + 3..];
    let Some(nl) = after.find('\n') else {
        return response.to_string();
    };
    let body = &after[nl + 1..];
    let end = body
        .match_indices("```")
        .find(|(i, _)| *i == 0 || body[..*i].ends_with('\n'))
        .map_or(body.len(), |(i, _)| i);
    body[..end].to_string()
}

/// Numbered response files from a directory, served in numeric order.
pub struct ReplayGenerator {
    dir: PathBuf,
    files: Vec<PathBuf>,
    next: usize,
}

impl ReplayGenerator {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self, FeedbackError> {
        let dir = dir.as_ref().to_path_buf();
        let entries = std::fs::read_dir(&dir)
            .map_err(|e| FeedbackError::Config(format!("replay directory {}: {e}", dir.display())))?;
        let mut numbered = Vec::new();
        for entry in entries {
            let path = entry?.path();
            if !path.is_file() {
                continue;
            }
            let name = path.file_name().unwrap_or_default().to_string_lossy().to_string();
            let digits: String = name.chars().take_while(char::is_ascii_digit).collect();
            if let Ok(n) = digits.parse::<u64>() {
                numbered.push((n, name, path));
            }
        }
        if numbered.is_empty() {
            return Err(FeedbackError::Config(format!(
                "replay directory {} has no numbered response files",
                dir.display()
            )));
        }
        numbered.sort();
        Ok(Self {
            dir,
            files: numbered.into_iter().map(|(_, _, p)| p).collect(),
            next: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}

impl CodeGenerator for ReplayGenerator {
    fn generate(&mut self, _prompt: &str) -> Result<String, FeedbackError> {
        let Some(path) = self.files.get(self.next) else {
            return Err(FeedbackError::GeneratorUnavailable(format!(
                "replay {} exhausted after {} responses",
                self.dir.display(),
                self.files.len()
            )));
        };
        self.next += 1;
        Ok(std::fs::read_to_string(path)?)
    }

    fn describe(&self) -> String {
        format!("replay:{}", self.dir.display())
    }
}

/// Always answers with the Python mirror of one builtin AM.
pub struct BuiltinGenerator {
    kind: BuiltinKind,
    rules: PolicyRules,
}

impl BuiltinGenerator {
    pub fn new(kind: BuiltinKind, rules: PolicyRules) -> Self {
        Self { kind, rules }
    }
}

impl CodeGenerator for BuiltinGenerator {
    fn generate(&mut self, _prompt: &str) -> Result<String, FeedbackError> {
        Ok(format!("```python\n{}```\n", mirror_source(self.kind, self.rules)))
    }

    fn describe(&self) -> String {
        format!("builtin:{}", self.kind.name())
    }
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_retry_base_ms() -> u64 {
    1000
}

/// Settings for an OpenAI-style chat-completion endpoint. The token is read
/// from the environment variable named by `auth_env`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpGeneratorConfig {
    pub base_url: String,
    pub model: String,
    pub auth_env: String,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
}

pub const HTTP_MAX_RETRIES: u32 = 3;

pub struct HttpChatGenerator {
    config: HttpGeneratorConfig,
    token: String,
    client: reqwest::blocking::Client,
}

impl HttpChatGenerator {
    pub fn new(config: HttpGeneratorConfig) -> Result<Self, FeedbackError> {
        let token = std::env::var(&config.auth_env).map_err(|_| {
            FeedbackError::GeneratorUnavailable(format!(
                "environment variable {} with the API token is not set",
                config.auth_env
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| FeedbackError::Config(format!("http client: {e}")))?;
        Ok(Self {
            config,
            token,
            client,
        })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn request_body(&self, prompt: &str) -> serde_json::Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.config.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }

    /// One attempt. `Err((retryable, message))` on failure.
    fn attempt(&self, body: &serde_json::Value) -> Result<String, (bool, String)> {
        let resp = self
            .client
            .post(self.endpoint())
            .bearer_auth(&self.token)
            .json(body)
            .send()
            .map_err(|e| (true, format!("request failed: {e}")))?;
        let status = resp.status();
        if !status.is_success() {
            let retryable = status.is_server_error() || status.as_u16() == 429;
            let text = resp.text().unwrap_or_default();
            return Err((retryable, format!("HTTP {status}: {}", text.trim())));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| (true, format!("response is not JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, "response has no choices[0].message.content".to_string()))
    }
}

impl CodeGenerator for HttpChatGenerator {
    fn generate(&mut self, prompt: &str) -> Result<String, FeedbackError> {
        let body = self.request_body(prompt);
        let mut delay = Duration::from_millis(self.config.retry_base_ms);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((retryable, msg)) => {
                    if !retryable || attempt == HTTP_MAX_RETRIES {
                        return Err(FeedbackError::GeneratorUnavailable(format!(
                            "{} after {} attempts: {msg}",
                            self.endpoint(),
                            attempt + 1
                        )));
                    }
                    log::warn!("generator request failed ({msg}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn describe(&self) -> String {
        format!("http:{} ({})", self.config.base_url, self.config.model)
    }
}

/// Which generator to use, as written on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorSpec {
    Http,
    Replay(PathBuf),
    Builtin(BuiltinKind),
}

impl std::str::FromStr for GeneratorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "http" {
            return Ok(GeneratorSpec::Http);
        }
        if let Some(dir) = s.strip_prefix("replay:") {
            return Ok(GeneratorSpec::Replay(PathBuf::from(dir)));
        }
        if let Some(name) = s.strip_prefix("builtin:") {
            return BuiltinKind::from_name(name)
                .map(GeneratorSpec::Builtin)
                .ok_or_else(|| format!("unknown builtin AM {name:?}"));
        }
        Err(format!("unknown generator {s:?} (expected http, replay:<dir> or builtin:<name>)"))
    }
}

/// Generator kinds and what they do.
pub fn generator_catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "http",
            "chat-completion endpoint (base_url, model, auth_env, temperature, max_tokens); retries up to 3 times with exponential backoff",
        ),
        ("replay:<dir>", "numbered response files from a directory, in order"),
        ("builtin:<name>", "the Python mirror of a builtin adaptation manager"),
    ]
}

pub fn make_generator(
    spec: &GeneratorSpec,
    http: Option<&HttpGeneratorConfig>,
    rules: PolicyRules,
) -> Result<Box<dyn CodeGenerator>, FeedbackError> {
    match spec {
        GeneratorSpec::Http => {
            let cfg = http.ok_or_else(|| {
                FeedbackError::Config("the http generator needs a [generator] section in the config".into())
            })?;
            Ok(Box::new(HttpChatGenerator::new(cfg.clone())?))
        }
        GeneratorSpec::Replay(dir) => Ok(Box::new(ReplayGenerator::new(dir)?)),
        GeneratorSpec::Builtin(kind) => Ok(Box::new(BuiltinGenerator::new(*kind, rules))),
    }
}

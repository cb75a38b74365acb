//! HTTP intent backend.
//!
//! Configuration comes from a TOML file (`--llm-config`) or, failing that,
//! from `COSPEECH_LLM_ENDPOINT`, `COSPEECH_LLM_TOKEN` and
//! `COSPEECH_LLM_TIMEOUT_S`.

use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use cospeech::intent::{BackendError, IntentBackend};
use serde::Deserialize;

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub endpoint: String,
    #[serde(default)]
    pub token: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}

impl LlmConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: LlmConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.check()
    }

    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var("COSPEECH_LLM_ENDPOINT")
            .context("no LLM endpoint: pass --llm-config or set COSPEECH_LLM_ENDPOINT")?;
        let token = std::env::var("COSPEECH_LLM_TOKEN").ok().filter(|t| !t.is_empty());
        let timeout_s = match std::env::var("COSPEECH_LLM_TIMEOUT_S") {
            Ok(s) => s.parse().context("COSPEECH_LLM_TIMEOUT_S is not a number")?,
            Err(_) => DEFAULT_TIMEOUT_S,
        };
        LlmConfig {
            endpoint,
            token,
            timeout_s,
        }
        .check()
    }

    fn check(self) -> Result<Self> {
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            bail!("timeout must be a positive number of seconds");
        }
        Ok(self)
    }
}

/// POSTs the prompt as plain text; the response body is the reply.
pub struct HttpBackend {
    agent: ureq::Agent,
    config: LlmConfig,
}

impl HttpBackend {
    pub fn new(config: LlmConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s)))
            .build()
            .into();
        HttpBackend { agent, config }
    }
}

impl IntentBackend for HttpBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "text/plain; charset=utf-8");
        if let Some(t) = &self.config.token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        match req.send(prompt) {
            Ok(mut resp) => resp
                .body_mut()
                .read_to_string()
                .map_err(|e| classify(&e)),
            Err(e) => Err(classify(&e)),
        }
    }
}

fn classify(e: &ureq::Error) -> BackendError {
    match e {
        ureq::Error::Timeout(_) => BackendError::Timeout,
        other => BackendError::Unreachable(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_defaults_timeout() {
        let cfg: LlmConfig = toml::from_str("endpoint = \"http://localhost:9/v1\"").unwrap();
        assert_eq!(cfg.timeout_s, DEFAULT_TIMEOUT_S);
        assert_eq!(cfg.token, None);
        assert!(toml::from_str::<LlmConfig>("endpoint = \"x\"\nmodel = \"y\"").is_err());
    }
}

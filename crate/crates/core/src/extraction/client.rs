//! Text-model client contract: send ordered (role, content) messages,
//! receive text. Implementable over any chat-completion-style HTTP API;
//! the stub variant replays recorded responses keyed by prompt hash so the
//! whole extraction surface tests without a network.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Duration;

use super::ExtractionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Message {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Message {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Message {
        Message {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Connection settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelClientConfig {
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for ModelClientConfig {
    fn default() -> Self {
        ModelClientConfig {
            endpoint: String::new(),
            model_name: String::new(),
            temperature: 0.2,
            max_tokens: 8192,
            timeout_secs: 120,
            retries: 1,
        }
    }
}

impl ModelClientConfig {
    /// Reads NEDTREE_MODEL_ENDPOINT and NEDTREE_MODEL_NAME (the key is read
    /// separately at request time from NEDTREE_MODEL_KEY).
    pub fn from_env() -> Result<ModelClientConfig, ExtractionError> {
        let endpoint = std::env::var("NEDTREE_MODEL_ENDPOINT")
            .map_err(|_| ExtractionError::BadConfig("NEDTREE_MODEL_ENDPOINT not set".into()))?;
        let model_name = std::env::var("NEDTREE_MODEL_NAME")
            .map_err(|_| ExtractionError::BadConfig("NEDTREE_MODEL_NAME not set".into()))?;
        Ok(ModelClientConfig {
            endpoint,
            model_name,
            ..ModelClientConfig::default()
        })
    }

    pub fn validate(&self) -> Result<(), ExtractionError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ExtractionError::BadConfig(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// The minimal client contract.
pub trait ModelClient: Send + Sync {
    fn complete(&self, messages: &[Message]) -> Result<String, ExtractionError>;
}

/// Hex SHA-256 over the ordered (role, content) transcript; the fixture key.
pub fn prompt_hash(messages: &[Message]) -> String {
    let mut hasher = Sha256::new();
    for m in messages {
        hasher.update(m.role.as_str().as_bytes());
        hasher.update(b"\n");
        hasher.update(m.content.as_bytes());
        hasher.update(b"\0");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{:02x}", b))
        .collect()
}

/// Fixture-backed client: responses live in `<dir>/<prompt-hash>.txt`.
#[derive(Debug, Clone)]
pub struct StubClient {
    dir: PathBuf,
}

impl StubClient {
    pub fn new(dir: impl Into<PathBuf>) -> StubClient {
        StubClient { dir: dir.into() }
    }

    /// Records a fixture for the given transcript. Used by tests and by
    /// fixture-preparation tooling.
    pub fn record(
        dir: &Path,
        messages: &[Message],
        response: &str,
    ) -> Result<String, ExtractionError> {
        let hash = prompt_hash(messages);
        std::fs::create_dir_all(dir).map_err(|e| ExtractionError::Io(e.to_string()))?;
        std::fs::write(dir.join(format!("{}.txt", hash)), response)
            .map_err(|e| ExtractionError::Io(e.to_string()))?;
        Ok(hash)
    }
}

impl ModelClient for StubClient {
    fn complete(&self, messages: &[Message]) -> Result<String, ExtractionError> {
        let hash = prompt_hash(messages);
        let path = self.dir.join(format!("{}.txt", hash));
        std::fs::read_to_string(&path).map_err(|_| {
            let hint = messages
                .iter()
                .rev()
                .find(|m| m.role == Role::User)
                .map(|m| m.content.chars().take(96).collect::<String>())
                .unwrap_or_default();
            ExtractionError::FixtureMissing { hash, hint }
        })
    }
}

/// HTTP client posting an OpenAI-style chat-completion body
/// (`model`, `messages`, `temperature`, `max_tokens`).
pub struct HttpClient {
    config: ModelClientConfig,
    api_key: Option<String>,
}

impl HttpClient {
    pub fn new(config: ModelClientConfig) -> Result<HttpClient, ExtractionError> {
        config.validate()?;
        Ok(HttpClient {
            config,
            api_key: std::env::var("NEDTREE_MODEL_KEY").ok(),
        })
    }

    /// The request body; split out so it is testable without a server.
    pub fn request_body(&self, messages: &[Message]) -> serde_json::Value {
        serde_json::json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        })
    }
}

impl ModelClient for HttpClient {
    fn complete(&self, messages: &[Message]) -> Result<String, ExtractionError> {
        let body = self.request_body(messages);
        let mut last_err = String::new();
        for _ in 0..=self.config.retries {
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(self.config.timeout_secs)))
                .build()
                .new_agent();
            let mut req = agent.post(&self.config.endpoint);
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {}", key));
            }
            match req.send_json(&body) {
                Ok(mut resp) => {
                    let value: serde_json::Value = resp
                        .body_mut()
                        .read_json()
                        .map_err(|e| ExtractionError::ModelUnreachable(e.to_string()))?;
                    let content = value["choices"][0]["message"]["content"]
                        .as_str()
                        .map(str::to_string);
                    return content.ok_or_else(|| ExtractionError::UnparseableResponse {
                        stage: "transport".to_string(),
                        detail: "response lacks choices[0].message.content".to_string(),
                    });
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(ExtractionError::ModelUnreachable(last_err))
    }
}

//! Remote chat-completion client and the disk cache wrapper.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::net;

use super::{ChatModel, OracleError, OracleRequest};

/// Generic chat-completion endpoint configuration. The auth token is read
/// from the named environment variable, never from the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteChatConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

pub struct RemoteChatModel {
    config: RemoteChatConfig,
    client: reqwest::blocking::Client,
}

impl RemoteChatModel {
    pub fn new(config: RemoteChatConfig) -> Result<Self, OracleError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        Ok(Self { config, client })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl ChatModel for RemoteChatModel {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        let api_key = std::env::var(&self.config.api_key_env).map_err(|_| {
            OracleError::Transport(format!(
                "auth token environment variable {} not set",
                self.config.api_key_env
            ))
        })?;
        let body = json!({
            "model": self.config.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.rendered_prompt}],
        });
        net::record_request();
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(api_key)
            .json(&body)
            .send()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(OracleError::Transport(format!("HTTP {}", resp.status())));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| OracleError::Transport("empty choices in chat response".into()))
    }
}

/// Disk cache keyed by prompt hash, wrapping any backend.
pub struct CachedChatModel<M: ChatModel> {
    inner: M,
    cache_dir: PathBuf,
}

impl<M: ChatModel> CachedChatModel<M> {
    pub fn new(inner: M, cache_dir: PathBuf) -> Self {
        Self { inner, cache_dir }
    }

    fn cache_path(&self, request: &OracleRequest) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(format!("{:?}|{}|", request.kind, request.temperature));
        hasher.update(&request.rendered_prompt);
        self.cache_dir.join(format!("{:x}.txt", hasher.finalize()))
    }
}

impl<M: ChatModel> ChatModel for CachedChatModel<M> {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        let path = self.cache_path(request);
        if let Ok(cached) = std::fs::read_to_string(&path) {
            return Ok(cached);
        }
        let reply = self.inner.complete(request)?;
        if let Some(dir) = path.parent() {
            let _ = std::fs::create_dir_all(dir);
        }
        let _ = std::fs::write(&path, &reply);
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{OracleKind, SequenceChatModel};

    #[test]
    fn cache_replays_first_reply() {
        let dir = std::env::temp_dir().join(format!("smog-cache-test-{}", std::process::id()));
        let model = CachedChatModel::new(SequenceChatModel::new(&["first", "second"]), dir.clone());
        let request = OracleRequest {
            kind: OracleKind::FinalAnswer,
            rendered_prompt: "same prompt".into(),
            temperature: 0.0,
        };
        assert_eq!(model.complete(&request).unwrap(), "first");
        assert_eq!(model.complete(&request).unwrap(), "first");
        let _ = std::fs::remove_dir_all(dir);
    }
}

//! Messages-style completion client with a JSONL audit trail.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::AugmentError;

pub const API_KEY_ENV: &str = "LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmClientConfig {
    pub url: String,
    pub model: String,
    pub max_tokens: usize,
    pub audit_log: PathBuf,
    /// Retries after a 429 response.
    pub max_retries: usize,
    pub timeout_secs: u64,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        LlmClientConfig {
            url: String::new(),
            model: String::new(),
            max_tokens: 4096,
            audit_log: PathBuf::from("llm_audit.jsonl"),
            max_retries: 3,
            timeout_secs: 300,
        }
    }
}

pub struct LlmClient {
    cfg: LlmClientConfig,
    api_key: Option<String>,
}

impl LlmClient {
    pub fn new(cfg: LlmClientConfig, api_key: Option<String>) -> Self {
        LlmClient { cfg, api_key }
    }

    /// Reads the credential from `LLM_API_KEY`.
    pub fn from_env(cfg: LlmClientConfig) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty());
        LlmClient::new(cfg, key)
    }

    fn audit(&self, entry: Value) -> Result<(), AugmentError> {
        if let Some(parent) = self.cfg.audit_log.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.cfg.audit_log)?;
        writeln!(f, "{entry}")?;
        Ok(())
    }

    /// Sends `prompt` as a single user message and returns the completion
    /// text. A 429 is retried after its `Retry-After` delay (seconds).
    pub fn generate(&self, prompt: &str) -> Result<String, AugmentError> {
        let key = self.api_key.as_deref().ok_or_else(|| {
            AugmentError::Auth(format!("{API_KEY_ENV} is not set"))
        })?;
        if self.cfg.url.is_empty() {
            return Err(AugmentError::Transport("no LLM endpoint configured".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(self.cfg.timeout_secs))
            .build()
            .map_err(|e| AugmentError::Transport(e.to_string()))?;
        let body = json!({
            "model": self.cfg.model,
            "max_tokens": self.cfg.max_tokens,
            "messages": [{"role": "user", "content": prompt}],
        });

        let mut attempt = 0;
        loop {
            let sent_at = now_secs();
            let resp = client
                .post(&self.cfg.url)
                .bearer_auth(key)
                .header("x-api-key", key)
                .json(&body)
                .send();
            let resp = match resp {
                Ok(r) => r,
                Err(e) => {
                    self.audit(json!({
                        "time": sent_at, "attempt": attempt, "request": body,
                        "error": e.to_string(),
                    }))?;
                    return Err(AugmentError::Transport(e.to_string()));
                }
            };
            let status = resp.status();
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok());
            let text = resp
                .text()
                .map_err(|e| AugmentError::Transport(e.to_string()))?;
            self.audit(json!({
                "time": sent_at, "attempt": attempt, "request": body,
                "status": status.as_u16(), "response": text,
            }))?;

            match status.as_u16() {
                200..=299 => {
                    info!("completion received ({} bytes)", text.len());
                    return extract_text(&text);
                }
                401 | 403 => return Err(AugmentError::Auth(format!("server returned {status}"))),
                429 if attempt < self.cfg.max_retries => {
                    let wait = retry_after.unwrap_or(1);
                    warn!("rate limited; retrying in {wait}s");
                    std::thread::sleep(Duration::from_secs(wait));
                    attempt += 1;
                }
                429 => {
                    return Err(AugmentError::RateLimited {
                        retry_after: retry_after.unwrap_or(0),
                    })
                }
                _ => return Err(AugmentError::Transport(format!("server returned {status}"))),
            }
        }
    }
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Accepts `{"content": [{"type": "text", "text": ...}]}` or
/// `{"choices": [{"message": {"content": ...}}]}` response bodies.
fn extract_text(body: &str) -> Result<String, AugmentError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| AugmentError::Transport(format!("invalid response JSON: {e}")))?;
    if let Some(blocks) = v.get("content").and_then(Value::as_array) {
        let text: String = blocks
            .iter()
            .filter_map(|b| b.get("text").and_then(Value::as_str))
            .collect();
        return Ok(text);
    }
    if let Some(s) = v.get("content").and_then(Value::as_str) {
        return Ok(s.to_string());
    }
    if let Some(s) = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
    {
        return Ok(s.to_string());
    }
    Err(AugmentError::Transport("unrecognized response shape".into()))
}

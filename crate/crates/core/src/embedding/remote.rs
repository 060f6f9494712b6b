//! HTTP client for the embedding service (`POST /embed`, `GET /health`).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingVector};

pub const BATCH_SIZE: usize = 32;
pub const MAX_RETRIES: usize = 3;

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub texts: &'a [String],
}

#[derive(Debug, Deserialize, Serialize)]
pub struct EmbedResponse {
    pub model: String,
    pub dim: usize,
    pub vectors: Vec<Vec<f32>>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct HealthResponse {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

#[derive(Debug)]
pub struct RemoteProvider {
    base_url: String,
    dim: usize,
    client: reqwest::blocking::Client,
    backoff_base: Duration,
    requests: AtomicUsize,
}

impl RemoteProvider {
    /// `endpoint` is the service base URL; a trailing `/embed` is tolerated.
    pub fn new(endpoint: &str, dim: usize) -> Result<Self, EmbeddingError> {
        let base = endpoint.trim_end_matches('/');
        let base = base.strip_suffix("/embed").unwrap_or(base).to_string();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| EmbeddingError::Transport(e.to_string()))?;
        Ok(RemoteProvider {
            base_url: base,
            dim,
            client,
            backoff_base: Duration::from_millis(500),
            requests: AtomicUsize::new(0),
        })
    }

    /// First retry delay; later retries double it.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Number of HTTP requests issued so far, retries included.
    pub fn requests_made(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn health(&self) -> Result<HealthResponse, EmbeddingError> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let resp = self
            .client
            .get(format!("{}/health", self.base_url))
            .send()
            .map_err(|e| EmbeddingError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(EmbeddingError::Transport(format!(
                "health check returned {}",
                resp.status()
            )));
        }
        resp.json()
            .map_err(|e| EmbeddingError::Transport(e.to_string()))
    }

    /// Embeds up to `BATCH_SIZE` texts in one call, retrying transport
    /// failures and 5xx responses with exponential backoff.
    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let url = format!("{}/embed", self.base_url);
        let mut attempt = 0;
        let body = loop {
            self.requests.fetch_add(1, Ordering::Relaxed);
            let result = self
                .client
                .post(&url)
                .json(&EmbedRequest { texts })
                .send()
                .map_err(|e| e.to_string())
                .and_then(|r| {
                    let status = r.status();
                    if status.is_server_error() {
                        Err(format!("server returned {status}"))
                    } else if !status.is_success() {
                        Ok(Err(EmbeddingError::Transport(format!(
                            "server returned {status}"
                        ))))
                    } else {
                        Ok(r.json::<EmbedResponse>()
                            .map_err(|e| EmbeddingError::Transport(e.to_string())))
                    }
                });
            match result {
                Ok(parsed) => break parsed?,
                Err(msg) if attempt < MAX_RETRIES => {
                    let delay = self.backoff_base * (1u32 << attempt);
                    warn!("embed request failed ({msg}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(msg) => return Err(EmbeddingError::Transport(msg)),
            }
        };

        if body.vectors.len() != texts.len() {
            return Err(EmbeddingError::Transport(format!(
                "expected {} vectors, got {}",
                texts.len(),
                body.vectors.len()
            )));
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(EmbeddingError::DimensionMismatch {
                        expected: self.dim,
                        got: v.len(),
                    });
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

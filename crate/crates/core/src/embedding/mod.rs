//! Text-to-vector providers and the aligned feature matrix they produce.

mod cache;
mod hashed;
mod remote;

use std::path::PathBuf;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{render_input, CorpusError, Dataset, Label};

pub use cache::{content_hash, EmbeddingCache};
pub use hashed::hashed_ngram_embed;
pub use remote::{EmbedResponse, HealthResponse, RemoteProvider, BATCH_SIZE};

pub const DEFAULT_DIM: usize = 768;
pub const ENDPOINT_ENV: &str = "EMBED_ENDPOINT";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no cached vector for {0}")]
    CacheMiss(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("non-finite value in embedding")]
    NonFinite,
    #[error("invalid provider config: {0}")]
    Config(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("pair {id}: {source}")]
    Pair {
        id: String,
        #[source]
        source: Box<EmbeddingError>,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A finite embedding vector, stored in single precision.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbeddingError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(EmbeddingVector(values))
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Precomputed,
    Remote,
    HashedNgram,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "precomputed" => Ok(ProviderKind::Precomputed),
            "remote" => Ok(ProviderKind::Remote),
            "hashed_ngram" | "hashed" => Ok(ProviderKind::HashedNgram),
            other => Err(format!("unknown provider {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ngram_range")]
    pub ngram_range: (usize, usize),
}

fn default_ngram_range() -> (usize, usize) {
    (3, 5)
}

impl ProviderConfig {
    pub fn hashed(dimension: usize, seed: u64) -> Self {
        ProviderConfig {
            kind: ProviderKind::HashedNgram,
            dimension,
            endpoint: None,
            cache_path: None,
            seed,
            ngram_range: default_ngram_range(),
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.dimension == 0 {
            return Err(EmbeddingError::Config("dimension must be positive".into()));
        }
        match self.kind {
            ProviderKind::Remote if self.endpoint.is_none() => Err(EmbeddingError::Config(
                format!("remote provider requires an endpoint (or {ENDPOINT_ENV})"),
            )),
            ProviderKind::Precomputed if self.cache_path.is_none() => Err(
                EmbeddingError::Config("precomputed provider requires cache_path".into()),
            ),
            ProviderKind::HashedNgram => {
                let (lo, hi) = self.ngram_range;
                if lo == 0 || lo > hi {
                    Err(EmbeddingError::Config(format!("invalid ngram_range ({lo}, {hi})")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Rows of features with their labels and pair ids, aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: Array2<f64>,
    pub labels: Vec<Label>,
    pub ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(x: Array2<f64>, labels: Vec<Label>, ids: Vec<String>) -> Self {
        assert_eq!(x.nrows(), labels.len(), "rows and labels misaligned");
        assert_eq!(x.nrows(), ids.len(), "rows and ids misaligned");
        FeatureMatrix { x, labels, ids }
    }

    /// Builds a matrix from row vectors with generated ids `0..n`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let mut x = Array2::zeros((rows.len(), d));
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), d, "ragged rows");
            x.row_mut(i).assign(&ndarray::ArrayView1::from(r.as_slice()));
        }
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        FeatureMatrix::new(x, labels, ids)
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            x: self.x.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

enum Backend {
    Hashed { seed: u64, range: (usize, usize) },
    Precomputed,
    Remote(RemoteProvider),
}

/// A configured provider plus its optional content-addressed cache.
pub struct Embedder {
    dim: usize,
    backend: Backend,
    cache: Option<EmbeddingCache>,
}

impl Embedder {
    /// Builds a provider. For `remote`, the `EMBED_ENDPOINT` environment
    /// variable takes precedence over the configured endpoint.
    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, EmbeddingError> {
        let mut cfg = cfg.clone();
        if cfg.kind == ProviderKind::Remote {
            if let Ok(ep) = std::env::var(ENDPOINT_ENV) {
                if !ep.trim().is_empty() {
                    cfg.endpoint = Some(ep);
                }
            }
        }
        cfg.validate()?;
        let backend = match cfg.kind {
            ProviderKind::HashedNgram => Backend::Hashed {
                seed: cfg.seed,
                range: cfg.ngram_range,
            },
            ProviderKind::Precomputed => Backend::Precomputed,
            ProviderKind::Remote => Backend::Remote(RemoteProvider::new(
                cfg.endpoint.as_deref().unwrap_or_default(),
                cfg.dimension,
            )?),
        };
        let cache = cfg
            .cache_path
            .as_ref()
            .map(|p| EmbeddingCache::open(p, cfg.dimension))
            .transpose()?;
        Ok(Embedder {
            dim: cfg.dimension,
            backend,
            cache,
        })
    }

    /// Wraps an already-built remote client (e.g. with a custom backoff).
    pub fn remote(provider: RemoteProvider, cache: Option<EmbeddingCache>) -> Self {
        Embedder {
            dim: provider.dimension(),
            backend: Backend::Remote(provider),
            cache,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn cache(&self) -> Option<&EmbeddingCache> {
        self.cache.as_ref()
    }

    /// HTTP requests issued by a remote backend; zero for local backends.
    pub fn requests_made(&self) -> usize {
        match &self.backend {
            Backend::Remote(r) => r.requests_made(),
            _ => 0,
        }
    }

    pub fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let hash = content_hash(text);
        if let Some(v) = self.cache.as_ref().and_then(|c| c.get(&hash)) {
            return Ok(v.clone());
        }
        let v = match &self.backend {
            Backend::Hashed { seed, range } => hashed_ngram_embed(text, self.dim, *seed, *range),
            Backend::Precomputed => return Err(EmbeddingError::CacheMiss(hash)),
            Backend::Remote(r) => r
                .embed_batch(&[text.to_string()])?
                .pop()
                .ok_or_else(|| EmbeddingError::Transport("empty response".into()))?,
        };
        if v.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(v)
    }

    /// Embeds every rendered pair. Cache hits are reused, misses are computed
    /// (remote misses in batches of `BATCH_SIZE`) and appended to the cache.
    pub fn embed_dataset(&mut self, d: &Dataset) -> Result<FeatureMatrix, EmbeddingError> {
        let mut labels = Vec::with_capacity(d.pairs.len());
        for p in &d.pairs {
            labels.push(p.label.ok_or_else(|| CorpusError::UnlabeledPair(p.id.clone()))?);
        }
        let texts: Vec<String> = d.pairs.iter().map(render_input).collect();
        let hashes: Vec<String> = texts.iter().map(|t| content_hash(t)).collect();

        let mut rows: Vec<Option<EmbeddingVector>> = hashes
            .iter()
            .map(|h| self.cache.as_ref().and_then(|c| c.get(h)).cloned())
            .collect();
        let missing: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].is_none()).collect();
        let with_id = |i: usize, e: EmbeddingError| EmbeddingError::Pair {
            id: d.pairs[i].id.clone(),
            source: Box::new(e),
        };

        let mut fresh = Vec::new();
        match &self.backend {
            Backend::Precomputed => {
                if let Some(&i) = missing.first() {
                    return Err(with_id(i, EmbeddingError::CacheMiss(hashes[i].clone())));
                }
            }
            Backend::Hashed { seed, range } => {
                for &i in &missing {
                    let v = hashed_ngram_embed(&texts[i], self.dim, *seed, *range);
                    rows[i] = Some(v.clone());
                    fresh.push((hashes[i].clone(), v));
                }
            }
            Backend::Remote(remote) => {
                // Identical texts are sent once.
                let mut unique: Vec<usize> = Vec::new();
                let mut seen = std::collections::HashSet::new();
                for &i in &missing {
                    if seen.insert(hashes[i].as_str()) {
                        unique.push(i);
                    }
                }
                let mut by_hash = std::collections::HashMap::new();
                for chunk in unique.chunks(BATCH_SIZE) {
                    let batch: Vec<String> = chunk.iter().map(|&i| texts[i].clone()).collect();
                    let vecs = remote.embed_batch(&batch).map_err(|e| with_id(chunk[0], e))?;
                    for (&i, v) in chunk.iter().zip(vecs) {
                        by_hash.insert(hashes[i].clone(), v.clone());
                        fresh.push((hashes[i].clone(), v));
                    }
                }
                for &i in &missing {
                    rows[i] = by_hash.get(&hashes[i]).cloned();
                }
            }
        }
        if let Some(cache) = self.cache.as_mut() {
            if !fresh.is_empty() {
                cache.extend(fresh)?;
            }
        }

        let mut x = Array2::zeros((rows.len(), self.dim));
        for (i, row) in rows.into_iter().enumerate() {
            let v = row.expect("every row filled");
            if v.len() != self.dim {
                return Err(with_id(
                    i,
                    EmbeddingError::DimensionMismatch {
                        expected: self.dim,
                        got: v.len(),
                    },
                ));
            }
            for (j, val) in v.values().iter().enumerate() {
                x[[i, j]] = *val as f64;
            }
        }
        let ids = d.pairs.iter().map(|p| p.id.clone()).collect();
        Ok(FeatureMatrix::new(x, labels, ids))
    }
}

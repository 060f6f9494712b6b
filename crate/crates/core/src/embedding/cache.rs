//! Content-addressed JSONL store of embedding vectors.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbeddingError, EmbeddingVector};

pub fn content_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    sha256: String,
    dim: usize,
    vector: Vec<f32>,
}

/// In-memory view of a cache file plus an append handle. Later records for a
/// key override earlier ones.
#[derive(Debug)]
pub struct EmbeddingCache {
    path: PathBuf,
    dim: usize,
    entries: HashMap<String, EmbeddingVector>,
}

impl EmbeddingCache {
    /// Loads `path` if it exists; a missing file is an empty cache.
    pub fn open(path: impl AsRef<Path>, dim: usize) -> Result<Self, EmbeddingError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line).map_err(|e| {
                    EmbeddingError::Cache(format!("{}:{}: {e}", path.display(), i + 1))
                })?;
                if rec.dim != dim || rec.vector.len() != dim {
                    return Err(EmbeddingError::DimensionMismatch {
                        expected: dim,
                        got: rec.vector.len(),
                    });
                }
                entries.insert(rec.sha256, EmbeddingVector::new(rec.vector)?);
            }
        }
        Ok(EmbeddingCache { path, dim, entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, hash: &str) -> Option<&EmbeddingVector> {
        self.entries.get(hash)
    }

    /// Appends new entries to the file and the in-memory map.
    pub fn extend(
        &mut self,
        items: impl IntoIterator<Item = (String, EmbeddingVector)>,
    ) -> Result<(), EmbeddingError> {
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        let mut w = BufWriter::new(file);
        for (hash, vec) in items {
            if vec.len() != self.dim {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: self.dim,
                    got: vec.len(),
                });
            }
            let rec = CacheRecord {
                sha256: hash.clone(),
                dim: self.dim,
                vector: vec.values().to_vec(),
            };
            serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
            self.entries.insert(hash, vec);
        }
        w.flush()?;
        Ok(())
    }
}

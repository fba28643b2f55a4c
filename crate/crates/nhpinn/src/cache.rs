//! Content-addressed artifact cache.
//!
//! Artifacts are keyed by the SHA-256 of a textual description of everything
//! that determines them (problem, resolution, hyperparameters, seed). Writes go
//! through a temporary file and an atomic rename.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use nhpinn_core::pinn::{LossBreakdown, TrainedModel};
use nhpinn_core::reference::GridSolution;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint::{decode_checkpoint, encode_checkpoint};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::grid_file::{decode_grid, encode_grid};

pub const CACHE_ENV: &str = "NHPINN_CACHE_DIR";

/// Bumped whenever a change alters cached numbers.
const CACHE_VERSION: &str = "nhpinn-cache-1";

pub fn content_hash(desc: &str) -> String {
    let mut h = Sha256::new();
    h.update(CACHE_VERSION.as_bytes());
    h.update([0u8]);
    h.update(desc.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug)]
pub struct ArtifactCache {
    root: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

#[derive(Serialize, Deserialize)]
struct TrainedRecord {
    hash: String,
    checkpoint: String,
    /// `[total, residual, boundary, extra, mean]` per epoch.
    losses: Vec<[f64; 5]>,
    errors: Vec<f64>,
    windowed_error: f64,
    companion_errors: Vec<Vec<f64>>,
    companion_windowed: Vec<f64>,
}

impl TrainedRecord {
    fn new(hash: String, m: &TrainedModel) -> Self {
        Self {
            hash,
            checkpoint: encode_checkpoint(&m.params),
            losses: m
                .losses
                .iter()
                .map(|l| [l.total, l.residual, l.boundary, l.extra, l.mean])
                .collect(),
            errors: m.errors.clone(),
            windowed_error: m.windowed_error,
            companion_errors: m.companion_errors.clone(),
            companion_windowed: m.companion_windowed.clone(),
        }
    }

    fn into_model(self) -> Result<TrainedModel> {
        Ok(TrainedModel {
            params: decode_checkpoint(&self.checkpoint)?,
            losses: self
                .losses
                .iter()
                .map(|l| LossBreakdown {
                    total: l[0],
                    residual: l[1],
                    boundary: l[2],
                    extra: l[3],
                    mean: l[4],
                })
                .collect(),
            errors: self.errors,
            windowed_error: self.windowed_error,
            companion_errors: self.companion_errors,
            companion_windowed: self.companion_windowed,
        })
    }
}

impl ArtifactCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    /// `$NHPINN_CACHE_DIR` when set, else `fallback`.
    pub fn from_env(fallback: &Path) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => Self::new(dir),
            _ => Self::new(fallback),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    fn path(&self, kind: &str, hash: &str, ext: &str) -> PathBuf {
        self.root.join(format!("{kind}-{}.{ext}", &hash[..32]))
    }

    /// Cached grid solution for `desc`, computed and stored on a miss.
    pub fn grid(&self, kind: &str, desc: &str, compute: impl FnOnce() -> Result<GridSolution>) -> Result<GridSolution> {
        let hash = content_hash(desc);
        let path = self.path(kind, &hash, "grid");
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok((sol, stored)) = decode_grid(&text) {
                if stored == hash {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(sol);
                }
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let sol = compute()?;
        write_atomic(&path, encode_grid(&sol, &hash).as_bytes())?;
        Ok(sol)
    }

    /// Cached training run for `desc`, computed and stored on a miss.
    pub fn trained(&self, kind: &str, desc: &str, compute: impl FnOnce() -> Result<TrainedModel>) -> Result<TrainedModel> {
        let hash = content_hash(desc);
        let path = self.path(kind, &hash, "json");
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(rec) = serde_json::from_str::<TrainedRecord>(&text) {
                if rec.hash == hash {
                    if let Ok(model) = rec.into_model() {
                        self.hits.fetch_add(1, Ordering::Relaxed);
                        return Ok(model);
                    }
                }
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let model = compute()?;
        let json = serde_json::to_string(&TrainedRecord::new(hash, &model)).map_err(|e| Error::format(e.to_string()))?;
        write_atomic(&path, json.as_bytes())?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct JsonRecord<T> {
    hash: String,
    value: T,
}

impl ArtifactCache {
    /// Cached serializable value for `desc`, computed and stored on a miss.
    pub fn json<T: Serialize + DeserializeOwned>(&self, kind: &str, desc: &str, compute: impl FnOnce() -> Result<T>) -> Result<T> {
        let hash = content_hash(desc);
        let path = self.path(kind, &hash, "json");
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(rec) = serde_json::from_str::<JsonRecord<T>>(&text) {
                if rec.hash == hash {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(rec.value);
                }
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = compute()?;
        let rec = JsonRecord { hash, value };
        let json = serde_json::to_string(&rec).map_err(|e| Error::format(e.to_string()))?;
        write_atomic(&path, json.as_bytes())?;
        Ok(rec.value)
    }
}

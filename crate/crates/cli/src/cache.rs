//! Content-addressed result cache.
//!
//! Entries live at `<dir>/<kind>/<key>.json`, where the key is the SHA-256 of
//! the kind, the crate version and the canonical JSON of the parameters.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "GLVORTEX_CACHE_DIR";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize, Deserialize)]
struct Entry<T> {
    key: String,
    kind: String,
    payload: T,
}

#[derive(Debug, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
    warnings: Mutex<Vec<String>>,
}

impl Cache {
    /// A cache that never stores anything.
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            ..Self::default()
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.warnings.lock().map(|w| w.clone()).unwrap_or_default()
    }

    pub fn key(kind: &str, params: &impl Serialize) -> String {
        let body = serde_json::to_string(params).expect("parameters serialize");
        let mut h = Sha256::new();
        h.update(kind.as_bytes());
        h.update(b"\n");
        h.update(VERSION.as_bytes());
        h.update(b"\n");
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn entry_path(&self, kind: &str, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(kind).join(format!("{key}.json")))
    }

    /// Stored value for `key`, `None` when absent, `CorruptCacheEntry` when unreadable.
    pub fn lookup<T: DeserializeOwned>(&self, kind: &str, key: &str) -> CliResult<Option<T>> {
        let Some(path) = self.entry_path(kind, key) else {
            return Ok(None);
        };
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CliError::io(path, e)),
        };
        match serde_json::from_slice::<Entry<T>>(&bytes) {
            Ok(e) if e.key == key && e.kind == kind => Ok(Some(e.payload)),
            _ => Err(CliError::CorruptCacheEntry(path)),
        }
    }

    /// Write atomically: concurrent readers see either the old or the new entry.
    pub fn store<T: Serialize>(&self, kind: &str, key: &str, value: &T) -> CliResult<()> {
        let Some(path) = self.entry_path(kind, key) else {
            return Ok(());
        };
        let parent = path.parent().expect("entry has a parent");
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        let entry = Entry {
            key: key.to_string(),
            kind: kind.to_string(),
            payload: value,
        };
        let body = serde_json::to_vec(&entry).expect("results serialize");
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| CliError::io(parent, e))?;
        tmp.write_all(&body).map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
        Ok(())
    }

    /// Cached value or a fresh computation (stored afterwards). Corrupt entries
    /// are evicted with a warning and recomputed.
    pub fn get_or_compute<T, F>(&self, kind: &str, params: &impl Serialize, compute: F) -> CliResult<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> CliResult<T>,
    {
        let key = Self::key(kind, params);
        match self.lookup(kind, &key) {
            Ok(Some(v)) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(v);
            }
            Ok(None) => {}
            Err(CliError::CorruptCacheEntry(path)) => {
                let msg = format!("warning: corrupt cache entry {}; recomputing", path.display());
                eprintln!("{msg}");
                if let Ok(mut w) = self.warnings.lock() {
                    w.push(msg);
                }
                let _ = fs::remove_file(&path);
            }
            Err(e) => return Err(e),
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = compute()?;
        self.store(kind, &key, &value)?;
        Ok(value)
    }
}

//! Content-addressed response cache.
//!
//! Responses are keyed by a digest of (backend identity, prompt), so
//! switching models never serves stale text. Writes go to a temporary file
//! first and are renamed into place, which tolerates concurrent writers.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::backend::{Backend, BackendError};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Transparent cache around any backend: a hit returns the byte-identical
/// prior response and the identity is the inner backend's.
pub struct CachingBackend<B: Backend> {
    inner: B,
    dir: PathBuf,
}

impl<B: Backend> CachingBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(CachingBackend { inner, dir })
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn entry_path(&self, prompt: &str) -> PathBuf {
        let identity = self.inner.identity();
        let mut hasher = Sha256::new();
        hasher.update(identity.as_bytes());
        hasher.update([0]);
        hasher.update(prompt.as_bytes());
        let digest = hex::encode(hasher.finalize());
        self.dir.join(sanitize(&identity)).join(format!("{digest}.txt"))
    }
}

fn sanitize(identity: &str) -> String {
    identity
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn atomic_write(path: &Path, contents: &str) -> std::io::Result<()> {
    let parent = path.parent().expect("cache entries live under the cache dir");
    fs::create_dir_all(parent)?;
    let tmp = parent.join(format!(
        ".tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

impl<B: Backend> Backend for CachingBackend<B> {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let path = self.entry_path(prompt);
        if path.exists() {
            return Ok(fs::read_to_string(&path)?);
        }
        let response = self.inner.complete(prompt)?;
        atomic_write(&path, &response)?;
        Ok(response)
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }

    fn single_flight(&self) -> bool {
        self.inner.single_flight()
    }
}

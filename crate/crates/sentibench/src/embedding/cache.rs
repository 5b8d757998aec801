//! Disk cache for embedding vectors.
//!
//! Layout: one subdirectory per model id, one file per text, named by the
//! hex SHA-256 of the text. Each file stores `dim` as a little-endian u32,
//! `dim` little-endian f64 values, then a u64 checksum (the first eight
//! bytes of the SHA-256 of everything before it). Writes go to a
//! temporary file in the same directory and are renamed into place, so a
//! crash mid-write never leaves a half-written entry under the final
//! name.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process;
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use super::EmbedError;

/// Content-addressed store of embedding rows.
#[derive(Clone, Debug)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

fn hex_digest(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Folds a model id into a safe directory name.
fn sanitize_model_id(model_id: &str) -> String {
    let mut out: String = model_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if out.is_empty() {
        out.push('_');
    }
    out
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
}

impl EmbeddingCache {
    /// Opens (and creates if needed) a cache rooted at `dir`.
    pub fn new(dir: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|source| EmbedError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(EmbeddingCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path of the entry for (`model_id`, `text`), whether or not it exists.
    pub fn entry_path(&self, model_id: &str, text: &str) -> PathBuf {
        self.dir
            .join(sanitize_model_id(model_id))
            .join(format!("{}.emb", hex_digest(text)))
    }

    /// Reads a cached row. `Ok(None)` means "not cached"; corrupt entries
    /// are reported rather than silently refetched so operators notice
    /// disk problems.
    pub fn get(&self, model_id: &str, text: &str) -> Result<Option<Vec<f64>>, EmbedError> {
        let path = self.entry_path(model_id, text);
        let bytes = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(EmbedError::Io { path, source }),
        };
        let corrupt = |reason: &str| EmbedError::CacheCorruption {
            path: path.clone(),
            reason: reason.to_string(),
        };
        if bytes.len() < 4 + 8 {
            return Err(corrupt("file shorter than header and checksum"));
        }
        let dim = u32::from_le_bytes(bytes[..4].try_into().expect("slice is 4 bytes")) as usize;
        let expected_len = 4 + dim * 8 + 8;
        if bytes.len() != expected_len {
            return Err(corrupt(&format!(
                "expected {expected_len} bytes for dim {dim}, found {}",
                bytes.len()
            )));
        }
        let (payload, tail) = bytes.split_at(expected_len - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("slice is 8 bytes"));
        if stored != checksum(payload) {
            return Err(corrupt("checksum mismatch"));
        }
        let values = payload[4..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk is 8 bytes")))
            .collect();
        Ok(Some(values))
    }

    /// Writes one row atomically (temp file + rename).
    pub fn put(&self, model_id: &str, text: &str, row: &[f64]) -> Result<(), EmbedError> {
        let path = self.entry_path(model_id, text);
        let parent = path.parent().expect("entry path has a parent");
        fs::create_dir_all(parent).map_err(|source| EmbedError::Io {
            path: parent.to_path_buf(),
            source,
        })?;

        let mut payload = Vec::with_capacity(4 + row.len() * 8 + 8);
        payload.extend_from_slice(&(row.len() as u32).to_le_bytes());
        for value in row {
            payload.extend_from_slice(&value.to_le_bytes());
        }
        let sum = checksum(&payload);
        payload.extend_from_slice(&sum.to_le_bytes());

        static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);
        let temp = parent.join(format!(
            ".tmp-{}-{}",
            process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| EmbedError::Io { path, source }
        };
        let mut file = fs::File::create(&temp).map_err(io_err(&temp))?;
        file.write_all(&payload).map_err(io_err(&temp))?;
        file.sync_all().map_err(io_err(&temp))?;
        drop(file);
        fs::rename(&temp, &path).map_err(io_err(&path))?;
        Ok(())
    }
}

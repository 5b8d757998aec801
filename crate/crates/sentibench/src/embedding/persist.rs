//! Model serialization.
//!
//! Containers start with the magic `SGTM`, a little-endian format
//! version, a kind tag, and the payload length, followed by a JSON
//! payload and a SHA-256 digest of everything before it. JSON keeps the
//! payload debuggable while the digest catches corrupt or truncated
//! files; f64 values survive the JSON round trip exactly because the
//! serializer emits shortest-round-trip representations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::classifier::ClassifierModel;
use super::pca::PcaModel;
use super::preprocess::PreprocessOptions;

/// First four bytes of every model file.
pub const MODEL_MAGIC: [u8; 4] = *b"SGTM";
/// Container format version this build writes and reads.
pub const MODEL_FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 1 + 8;
const DIGEST_LEN: usize = 32;

/// The full embedding-strategy pipeline: everything needed to score new
/// text given an embedding backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    /// Embedding model the pipeline was trained against.
    pub embedding_model_id: String,
    pub preprocess: PreprocessOptions,
    /// Dimensionality reduction; `None` means raw embeddings feed the
    /// classifier directly.
    pub pca: Option<PcaModel>,
    pub classifier: ClassifierModel,
}

/// Anything a model file can hold.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelFile {
    Classifier(ClassifierModel),
    Pca(PcaModel),
    Pipeline(PipelineModel),
}

impl ModelFile {
    fn kind_tag(&self) -> u8 {
        match self {
            ModelFile::Classifier(_) => 1,
            ModelFile::Pca(_) => 2,
            ModelFile::Pipeline(_) => 3,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelFile::Classifier(_) => "classifier",
            ModelFile::Pca(_) => "pca",
            ModelFile::Pipeline(_) => "pipeline",
        }
    }
}

impl fmt::Display for ModelFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind_name())
    }
}

/// Persistence failures.
#[derive(Debug, Error)]
pub enum PersistError {
    #[error("model io failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "unsupported model format version {found} (this build reads version \
         {MODEL_FORMAT_VERSION})"
    )]
    VersionMismatch { found: u32 },
    #[error("model file failed integrity checks: {0}")]
    ChecksumFailure(String),
    #[error("malformed model file: {0}")]
    Malformed(String),
}

fn serialize_payload(model: &ModelFile) -> Vec<u8> {
    let json = match model {
        ModelFile::Classifier(m) => serde_json::to_vec(m),
        ModelFile::Pca(m) => serde_json::to_vec(m),
        ModelFile::Pipeline(m) => serde_json::to_vec(m),
    };
    json.expect("models contain only serializable data")
}

/// Assembles the container bytes for a kind tag and JSON payload.
pub(crate) fn encode_container(kind_tag: u8, payload: &[u8]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + payload.len() + DIGEST_LEN);
    bytes.extend_from_slice(&MODEL_MAGIC);
    bytes.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    bytes.push(kind_tag);
    bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    bytes.extend_from_slice(payload);
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);
    bytes
}

/// Writes a model container to disk.
pub fn save_model(model: &ModelFile, path: impl AsRef<Path>) -> Result<(), PersistError> {
    let path = path.as_ref();
    let bytes = encode_container(model.kind_tag(), &serialize_payload(model));
    fs::write(path, bytes).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and verifies a model container.
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile, PersistError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    if bytes.len() < 8 {
        return Err(PersistError::ChecksumFailure(format!(
            "file is {} bytes, shorter than the fixed header",
            bytes.len()
        )));
    }
    if bytes[..4] != MODEL_MAGIC {
        return Err(PersistError::Malformed(
            "missing SGTM magic; not a model file".into(),
        ));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("slice is 4 bytes"));
    if version != MODEL_FORMAT_VERSION {
        return Err(PersistError::VersionMismatch { found: version });
    }
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(PersistError::ChecksumFailure(format!(
            "file is {} bytes, shorter than an empty container",
            bytes.len()
        )));
    }
    let kind_tag = bytes[8];
    let payload_len =
        u64::from_le_bytes(bytes[9..HEADER_LEN].try_into().expect("slice is 8 bytes")) as usize;
    let expected_total = HEADER_LEN + payload_len + DIGEST_LEN;
    if bytes.len() != expected_total {
        return Err(PersistError::ChecksumFailure(format!(
            "expected {expected_total} bytes for a {payload_len}-byte payload, found {}",
            bytes.len()
        )));
    }
    let (body, stored_digest) = bytes.split_at(expected_total - DIGEST_LEN);
    let digest = Sha256::digest(body);
    if digest.as_slice() != stored_digest {
        return Err(PersistError::ChecksumFailure("digest mismatch".into()));
    }

    let payload = &body[HEADER_LEN..];
    let malformed = |e: serde_json::Error| PersistError::Malformed(e.to_string());
    match kind_tag {
        1 => Ok(ModelFile::Classifier(
            serde_json::from_slice(payload).map_err(malformed)?,
        )),
        2 => Ok(ModelFile::Pca(
            serde_json::from_slice(payload).map_err(malformed)?,
        )),
        3 => Ok(ModelFile::Pipeline(
            serde_json::from_slice(payload).map_err(malformed)?,
        )),
        other => Err(PersistError::Malformed(format!(
            "unknown model kind tag {other}"
        ))),
    }
}

//! Files on disk: Y4M and PNG-sequence containers, canonical JSON documents,
//! dataset manifests and the append-only response log.

mod canonical;
mod manifest;
mod png_seq;
mod responses;
mod y4m;

use std::path::PathBuf;

use thiserror::Error;

use crate::encoder::EncodeError;

pub use canonical::{
    canonicalize, format_number, from_canonical_str, read_document, to_canonical_line, to_canonical_string,
    write_document, SchemaTag,
};
pub(crate) use canonical::document_text;
pub use manifest::{ContainerFormat, ContentSource, Manifest, ManifestEntry, Prompts};
pub use png_seq::{
    encode_png, encode_rgb_png, frame_file_name, png_sequence_files, read_png_sequence, write_png_sequence, SequenceSidecar,
    SIDECAR_FILE,
};
pub use responses::{append_response, read_responses, ResponseLog};
pub use y4m::{read_y4m, read_y4m_file, write_y4m, write_y4m_file};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("Y4M needs even dimensions, got {0}x{1}")]
    OddDimensions(usize, usize),
    #[error("bad Y4M header: {0}")]
    BadHeader(String),
    #[error("Y4M frame {0} is truncated")]
    TruncatedFrame(usize),
    #[error("unsupported Y4M chroma tag `{0}`")]
    UnsupportedChromaTag(String),
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("duplicate video id `{0}`")]
    DuplicateVideoId(String),
    #[error("{path}: frame is {actual:?}, expected {expected:?}")]
    MixedDimensions {
        path: PathBuf,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error(transparent)]
    Sequence(#[from] EncodeError),
}

impl StoreError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> StoreError {
        let path = path.into();
        move |source| StoreError::Io { path, source }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> StoreError {
        StoreError::SchemaViolation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl SchemaTag for crate::metrics::SnrReport {
    const SCHEMA: &'static str = "tnoise.snr_report/1";
}

impl SchemaTag for crate::eval::Roster {
    const SCHEMA: &'static str = "tnoise.roster/1";
}

impl SchemaTag for crate::eval::ThresholdReport {
    const SCHEMA: &'static str = "tnoise.threshold_report/1";
}

impl SchemaTag for crate::eval::AccuracyReport {
    const SCHEMA: &'static str = "tnoise.accuracy_report/1";
}

//! Dataset schema, embedding ingestion and report emission.

mod embed;
mod record;
mod report;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub use embed::{embed_missing, EmbedFailure, EmbeddingClient, EmbeddingClientConfig};
pub use record::{load_dataset, parse_dataset, write_dataset, DetectionRecord, HallucType, Label};
pub use report::{
    format_sig6, read_scores_csv, read_summary_json, read_transfer_csv, read_transfer_json, render_report, write_report, Report,
    ReportFormat, ScoredRow, SCORE_COLUMNS, SUMMARY_COLUMNS,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("line {line}: embedding dimension {found} does not match {expected}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("embedding service returned HTTP {status}: {body}")]
    Http { status: u16, body: String },

    #[error("embedding request timed out: {0}")]
    Timeout(String),

    #[error("embedding request failed: {0}")]
    Transport(String),

    #[error("embedding service response invalid: {0}")]
    Protocol(String),

    #[error("embedding service returned dimension {found}, expected {expected}")]
    EmbeddingDimension { expected: usize, found: usize },

    #[error(transparent)]
    Core(#[from] crate::error::Error),
}

impl DataError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| DataError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| DataError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| DataError::io(path, e))?;
    tmp.persist(path).map_err(|e| DataError::io(path, e.error))?;
    Ok(())
}

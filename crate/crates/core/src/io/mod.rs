//! On-disk formats: scene documents, depth and id rasters, camera sequences,
//! condition bundles, labeling inputs and evaluation pairs.
//!
//! Text is ASCII with LF line endings and `.` as the decimal separator.
//! Reals are written in the shortest form that parses back to the same
//! `f64`. Every file is written to a temporary sibling and renamed into
//! place, so readers never observe a partial write.

pub mod bundle;
pub mod camera;
pub mod eval;
pub mod ingest;
pub mod raster;
pub mod scene_doc;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error at byte {offset} (line {line}, column {column}): {message}")]
    Parse { offset: usize, line: usize, column: usize, message: String },
    #[error("schema_version {found} is not supported; this build reads version {supported}")]
    SchemaVersionUnsupported { found: u64, supported: u32 },
    #[error("depth {max_depth} m does not fit 16 bits at {scale} m per unit; use a scale of at least {suggested_scale}")]
    DepthOverflow { max_depth: f64, scale: f64, suggested_scale: f64 },
    #[error("line {line}: expected {expected} fields, got {got}")]
    FieldCount { line: usize, expected: usize, got: usize },
    #[error("line {line}, field {field}: {text:?} is not a finite number")]
    NonFiniteValue { line: usize, field: usize, text: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("png: {0}")]
    Png(String),
    #[error("pfm: {0}")]
    Pfm(String),
    #[error("entity id {0} does not fit an 8-bit indexed PNG")]
    IdOutOfRange(u32),
    #[error("{first} and {second} disagree: {detail}")]
    Consistency { first: String, second: String, detail: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: Box<FormatError> },
}

impl FormatError {
    pub fn consistency(first: impl Into<String>, second: impl Into<String>, detail: impl Into<String>) -> FormatError {
        FormatError::Consistency { first: first.into(), second: second.into(), detail: detail.into() }
    }

    /// The error without file context.
    pub fn root(&self) -> &FormatError {
        match self {
            FormatError::File { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Attaches a file path to errors.
pub trait InFile<T> {
    fn in_file(self, path: &Path) -> Result<T, FormatError>;
}

impl<T, E: Into<FormatError>> InFile<T> for Result<T, E> {
    fn in_file(self, path: &Path) -> Result<T, FormatError> {
        self.map_err(|e| match e.into() {
            e @ FormatError::File { .. } => e,
            e => FormatError::File { path: path.to_path_buf(), source: Box::new(e) },
        })
    }
}

/// Writes `bytes` to a temporary file next to `path`, syncs it, and renames
/// it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new().prefix(".tmp-").tempfile_in(dir).in_file(path)?;
    tmp.write_all(bytes).in_file(path)?;
    tmp.as_file().sync_all().in_file(path)?;
    tmp.persist(path).map_err(|e| e.error).in_file(path)?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).in_file(path)
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    let bytes = read_file(path)?;
    String::from_utf8(bytes).map_err(|e| FormatError::Invalid(format!("not UTF-8: {e}"))).in_file(path)
}

/// Shortest round-trip decimal; negative zero is written as `0`.
pub fn fmt_real(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// `%05d` frame file name.
pub fn frame_name(frame: usize, ext: &str) -> String {
    format!("{frame:05}.{ext}")
}
